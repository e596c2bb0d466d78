"""Crop-scale enlargement and what it does to positive anchors.

On a synthetic crowd-photo dataset, widening the crop-scale choices from
[0.3..1.0] to [0.3..2.0] shifts faces toward the small scales and lifts
the stride-8 positive count. Point DETSPACE_DATASET_ROOT at a real dataset
root to run the same accounting on actual annotations.
"""

import os
from pathlib import Path

import numpy as np

from detspace import BASELINE_CROP, SR_CROP, epoch_positive_stats, face_scale_cdf
from detspace.report import cdf_svg, match_stats_svg
from detspace.widerface import FaceBox, FaceDataset, ImageAnnotation

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)


def synthetic_crowd(images=80, width=1024, height=768, faces_per_image=8, seed=8):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(images):
        faces = []
        for _ in range(faces_per_image):
            s = float(np.exp(rng.uniform(np.log(12), np.log(90))))
            ar = float(rng.uniform(0.8, 1.25))
            faces.append(FaceBox(float(rng.uniform(0, width - s)),
                                 float(rng.uniform(0, height - s)),
                                 s * ar, s / ar))
        out.append(ImageAnnotation(f"im{i:04d}.jpg", width, height, faces))
    return FaceDataset(out, "synthetic")


dataset = synthetic_crowd()
thresholds, fractions = face_scale_cdf(dataset, thresholds=(32, 16, 8))
print("face-scale CDF at the 640 long-edge bound:")
for t, f in zip(thresholds, fractions):
    print(f"  P(scale < {t:g}) = {f:.4f}")

full_t, full_f = face_scale_cdf(dataset)
(OUT / "scale_cdf.svg").write_text(cdf_svg(full_t, full_f))

base = epoch_positive_stats(dataset, BASELINE_CROP, seed=3)
sr = epoch_positive_stats(dataset, SR_CROP, seed=3)
print("\npositive anchors per scale, one simulated epoch:")
print(f"  {'scale':>6s} {'baseline':>9s} {'enlarged':>9s}")
for scale in (16, 32, 64, 128, 256, 512):
    print(f"  {scale:6d} {base.positives[scale]:9d} {sr.positives[scale]:9d}")
print(f"  stride-8 (scale 16) ratio: {sr.positives[16] / base.positives[16]:.2f}x")

(OUT / "positives.svg").write_text(
    match_stats_svg({"baseline": base.positives, "enlarged": sr.positives}))
print(f"\nwrote {OUT / 'scale_cdf.svg'} and {OUT / 'positives.svg'}")

if os.environ.get("DETSPACE_DATASET_ROOT"):
    print("\nDETSPACE_DATASET_ROOT is set; use the CLI for the real dataset:")
    print("  detspace scale-stats --gt .../wider_face_val_bbx_gt.txt "
          "--image-root .../WIDER_val/images")

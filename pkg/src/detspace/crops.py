"""Training-geometry simulation: face scale statistics, square-crop
augmentation, and per-epoch positive-anchor accounting.

The crop model mirrors the training-time augmentation: a square patch with
side = choice * min(W, H) is placed uniformly (fully inside the image when
it fits, covering the image otherwise), faces whose centres fall inside are
kept, translated and rescaled to the 640x640 canvas. Only the geometry is
simulated; pixels never enter the picture.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .anchors import (
    ATSS_TOPK,
    CANVAS_SIZE,
    AnchorGrid,
    atss_assign,
    candidate_positive_counts,
    tile_anchors,
)
from .widerface import FaceBox, FaceDataset, ImageAnnotation, filter_faces

BASELINE_SCALES = (0.3, 0.45, 0.6, 0.8, 1.0)
SR_SCALES = (0.3, 0.45, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0)

ANCHOR_SIDES = (16, 32, 64, 128, 256, 512)
GT_BIN_EDGES = (4, 8, 16, 32, 64, 128, 256, 512)


@dataclass(frozen=True)
class CropPolicy:
    scale_choices: tuple[float, ...]
    output_size: int = CANVAS_SIZE

    def __post_init__(self):
        if not self.scale_choices or any(c <= 0 for c in self.scale_choices):
            raise ValueError(f"crop scale choices must be positive, got {self.scale_choices}")
        if self.output_size <= 0:
            raise ValueError("crop output size must be positive")


BASELINE_CROP = CropPolicy(BASELINE_SCALES)
SR_CROP = CropPolicy(SR_SCALES)


def crop_policy(name: str) -> CropPolicy:
    try:
        return {"baseline": BASELINE_CROP, "sr": SR_CROP}[name]
    except KeyError:
        raise ValueError(f"unknown crop policy {name!r} (expected 'baseline' or 'sr')") from None


def face_scale_cdf(dataset: FaceDataset, long_edge: int = 640,
                   thresholds=None, include_invalid: bool = False):
    """Fractions of faces strictly below each scale threshold.

    Faces are rescaled by long_edge / max(W, H) of their image; scale is the
    geometric mean of the rescaled box sides. With thresholds=None the full
    curve over the integer grid 1..long_edge+1 is returned.

    Returns (thresholds, fractions) as float arrays.
    """
    scales = []
    for im in dataset.images:
        if im.width is None or im.height is None:
            raise ValueError(f"image dimensions unresolved for {im.path}")
        factor = long_edge / max(im.width, im.height)
        for f in filter_faces(im, include_invalid):
            scales.append(f.scale() * factor)
    if not scales:
        raise ValueError("no faces to accumulate after filtering")
    scales = np.sort(np.asarray(scales))
    if thresholds is None:
        thresholds = np.arange(1, long_edge + 2, dtype=np.float64)
    else:
        thresholds = np.asarray(list(thresholds), dtype=np.float64)
    fractions = np.searchsorted(scales, thresholds, side="left") / len(scales)
    return thresholds, fractions


def simulate_crop(image: ImageAnnotation, rng: np.random.Generator,
                  policy: CropPolicy = BASELINE_CROP, include_invalid: bool = False,
                  clip: bool = False) -> list[FaceBox]:
    """One random square crop; returns the surviving faces on the canvas.

    Draw order: scale choice, then x origin, then y origin. A face survives
    when its centre lies inside the crop; kept boxes are translated and
    scaled by output_size / side. Border clipping is off by default so the
    transform preserves aspect ratios exactly.
    """
    if image.width is None or image.height is None:
        raise ValueError(f"image dimensions unresolved for {image.path}")
    w_img, h_img = float(image.width), float(image.height)
    choice = policy.scale_choices[int(rng.integers(len(policy.scale_choices)))]
    side = choice * min(w_img, h_img)

    def origin(extent: float) -> float:
        lo, hi = (0.0, extent - side) if side <= extent else (extent - side, 0.0)
        return float(rng.uniform(lo, hi))

    x0 = origin(w_img)
    y0 = origin(h_img)
    factor = policy.output_size / side

    kept: list[FaceBox] = []
    for f in filter_faces(image, include_invalid):
        cx = f.x + f.w / 2.0
        cy = f.y + f.h / 2.0
        if not (x0 <= cx < x0 + side and y0 <= cy < y0 + side):
            continue
        nx, ny = (f.x - x0) * factor, (f.y - y0) * factor
        nw, nh = f.w * factor, f.h * factor
        if clip:
            x2 = min(nx + nw, policy.output_size)
            y2 = min(ny + nh, policy.output_size)
            nx, ny = max(nx, 0.0), max(ny, 0.0)
            nw, nh = max(x2 - nx, 0.0), max(y2 - ny, 0.0)
        kept.append(FaceBox(nx, ny, nw, nh, *f.attrs))
    return kept


@dataclass
class MatchStats:
    """Positive-anchor and ground-truth scale histograms over simulated epochs."""

    positives: dict[int, int] = field(default_factory=lambda: {s: 0 for s in ANCHOR_SIDES})
    gt_hist: dict[int, int] = field(default_factory=lambda: {e: 0 for e in (0,) + GT_BIN_EDGES})
    epochs: int = 0

    def __add__(self, other: "MatchStats") -> "MatchStats":
        pos = {s: self.positives.get(s, 0) + other.positives.get(s, 0)
               for s in set(self.positives) | set(other.positives)}
        gt = {e: self.gt_hist.get(e, 0) + other.gt_hist.get(e, 0)
              for e in set(self.gt_hist) | set(other.gt_hist)}
        return MatchStats(pos, gt, self.epochs + other.epochs)

    @property
    def total_positives(self) -> int:
        return sum(self.positives.values())

    def to_dict(self) -> dict:
        return {
            "positives_by_anchor_scale": {str(k): v for k, v in sorted(self.positives.items())},
            "gt_by_scale_bin": {str(k): v for k, v in sorted(self.gt_hist.items())},
            "epochs": self.epochs,
        }

    def to_csv(self) -> str:
        lines = ["kind,scale,count"]
        for k, v in sorted(self.positives.items()):
            lines.append(f"positive,{k},{v}")
        for k, v in sorted(self.gt_hist.items()):
            lines.append(f"gt,{k},{v}")
        return "\n".join(lines) + "\n"


def _gt_bin(scale: float) -> int:
    """Lower edge of the geometric bin holding `scale`; 0 collects < 4."""
    edge = 0
    for e in GT_BIN_EDGES:
        if scale >= e:
            edge = e
        else:
            break
    return edge


def epoch_positive_stats(dataset: FaceDataset, policy: CropPolicy, seed: int,
                         epochs: int = 1, k: int = ATSS_TOPK,
                         include_invalid: bool = False, dedup: bool = True,
                         grid: AnchorGrid | None = None) -> MatchStats:
    """Simulate `epochs` epochs of one crop per image and accumulate matches.

    Per-image randomness comes from a (seed, epoch, image index) substream,
    so results are independent of the processing order. `dedup=False` counts
    per-gt candidates before cross-gt resolution.
    """
    grid = grid if grid is not None else tile_anchors(policy.output_size)
    boxes = grid.boxes
    strides = grid.strides
    stats = MatchStats(epochs=epochs)
    for e in range(epochs):
        for idx, image in enumerate(dataset.images):
            rng = np.random.default_rng([seed, e, idx])
            faces = simulate_crop(image, rng, policy, include_invalid)
            if not faces:
                continue
            for f in faces:
                stats.gt_hist[_gt_bin(f.scale())] += 1
            gt = np.asarray([f.xyxy() for f in faces], dtype=np.float64)
            assign = (atss_assign if dedup else candidate_positive_counts)(boxes, strides, gt, k)
            for pos in assign.values():
                for side in grid.sides[pos]:
                    stats.positives[int(side)] += 1
    return stats

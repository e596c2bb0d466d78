"""Analytic MAC/parameter accounting for the four baseline detectors.

Reproduces the published totals at the 640x480 test bound and writes a
stacked-bar SVG of the 2.5 G model's computation split.
"""

from pathlib import Path

from detspace import BASELINE_ARCHS, component_ratios, detector_flops, enumerate_layers
from detspace.report import flops_svg

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

print(f"{'model':18s} {'Gmacs':>8s} {'Mparams':>8s}  backbone/neck/head split")
for name, arch in BASELINE_ARCHS.items():
    br = detector_flops(arch, (640, 480))
    r = component_ratios(br)
    split = " / ".join(f"{r[c]:.1%}" for c in ("backbone", "neck", "head"))
    print(f"{name:18s} {br.total_macs / 1e9:8.4f} {br.total_params / 1e6:8.4f}  {split}")

arch = BASELINE_ARCHS["resnet_2.5gf"]
br = detector_flops(arch)
(OUT / "flops_split.svg").write_text(flops_svg(br, "2.5 G baseline computation split"))
print(f"\nwrote {OUT / 'flops_split.svg'}")

layers = enumerate_layers(arch)
print(f"\nfirst layers of the 2.5 G baseline ({len(layers)} total):")
for layer in layers[:6]:
    print(f"  {layer.name:14s} {layer.in_ch:4d}->{layer.out_ch:<4d} "
          f"k{layer.kernel} s{layer.stride}  {layer.macs:>12,d} macs")

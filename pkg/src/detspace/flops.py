"""Analytic multiply-add and parameter accounting.

Counts fused multiply-adds (MACs) of every convolution at a given input
resolution; bias, normalization and activation cost are excluded. Parameter
counts cover conv weights plus normalization affine pairs (2 per channel);
prediction convs carry no norm.

Layout, fixed for the whole artifact:

* stem (basic/bottleneck): 3x3/2 conv to w1/2, two 3x3 convs to w1/2 and w1,
  then a 3x3/2 max pool (zero MACs). C2 blocks run at stride 4.
* stem (depthwise): a single 3x3/2 conv to w1; the first C2 block strides.
* stages C2..C5 sit at strides 4/8/16/32; the first block of C3..C5
  downsamples, with a 1x1 projection shortcut wherever width or resolution
  changes (depthwise blocks carry no shortcut).
* neck: 1x1 laterals from C3/C4/C5 to n channels, top-down 3x3 fusion convs
  at strides 8/16, bottom-up 3x3/2 transfer convs plus 3x3 fusion convs at
  strides 16/32.
* head: one 3x3 conv n->h, (m-1) convs h->h, then two 3x3 prediction convs
  (2 score + 8 box channels for two anchors per location). Weights are
  shared across the three levels, so head parameters are counted once
  (attached to the stride-8 rows) while MACs accrue per level.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from .arch import (
    ANCHORS_PER_LOCATION,
    BACKBONE_COMPONENTS,
    COMPONENTS,
    STAGE_NAMES,
    STRIDES,
    ArchError,
    BackboneConfig,
    BlockKind,
    DetectorArch,
    HeadConfig,
    NeckConfig,
)

DEFAULT_INPUT = (640, 480)  # width, height; the VGA test bound

# Prediction channels per location: score + 4 box values per anchor.
CLS_CHANNELS = ANCHORS_PER_LOCATION * 1
BOX_CHANNELS = ANCHORS_PER_LOCATION * 4


def conv_macs(in_ch: int, out_ch: int, kernel: int, out_h: int, out_w: int, groups: int = 1) -> int:
    """MACs of a conv layer: out_h * out_w * out_ch * (in_ch/groups) * kernel^2."""
    for name, v in (("in_ch", in_ch), ("out_ch", out_ch), ("kernel", kernel),
                    ("out_h", out_h), ("out_w", out_w), ("groups", groups)):
        if int(v) <= 0:
            raise ArchError(f"conv_macs: {name} must be positive, got {v}")
    if in_ch % groups or out_ch % groups:
        raise ArchError(f"conv_macs: channels ({in_ch}, {out_ch}) not divisible by groups={groups}")
    return out_h * out_w * out_ch * (in_ch // groups) * kernel * kernel


def conv_params(in_ch: int, out_ch: int, kernel: int, groups: int = 1, norm: bool = True) -> int:
    """Weight parameters of a conv, plus 2*out_ch affine when normalized."""
    return out_ch * (in_ch // groups) * kernel * kernel + (2 * out_ch if norm else 0)


@dataclass(frozen=True)
class Layer:
    name: str
    component: str        # one of COMPONENTS
    in_ch: int
    out_ch: int
    kernel: int
    stride: int
    out_h: int
    out_w: int
    groups: int
    macs: int
    params: int


def _grids(input_size: tuple[int, int]) -> dict[int, tuple[int, int]]:
    w, h = int(input_size[0]), int(input_size[1])
    if w <= 0 or h <= 0 or w % 32 or h % 32:
        raise ArchError(f"input size must be positive and divisible by 32, got {w}x{h}")
    return {s: (h // s, w // s) for s in (2, 4, 8, 16, 32)}


class _Tape:
    def __init__(self):
        self.layers: list[Layer] = []

    def conv(self, name, component, in_ch, out_ch, kernel, stride, out_h, out_w,
             groups=1, norm=True, count_params=True):
        macs = conv_macs(in_ch, out_ch, kernel, out_h, out_w, groups)
        params = conv_params(in_ch, out_ch, kernel, groups, norm) if count_params else 0
        self.layers.append(Layer(name, component, in_ch, out_ch, kernel, stride,
                                 out_h, out_w, groups, macs, params))

    def pool(self, name, component, ch, kernel, stride, out_h, out_w):
        self.layers.append(Layer(name, component, ch, ch, kernel, stride, out_h, out_w, 1, 0, 0))


def _emit_block(tape: _Tape, name: str, component: str, kind: BlockKind,
                in_ch: int, width: int, downsample: bool,
                out_hw: tuple[int, int], in_hw: tuple[int, int]) -> int:
    """Append one backbone block; returns its output channel count."""
    oh, ow = out_hw
    stride = 2 if downsample else 1
    if kind is BlockKind.DEPTHWISE:
        tape.conv(f"{name}.dw", component, in_ch, in_ch, 3, stride, oh, ow, groups=in_ch)
        tape.conv(f"{name}.pw", component, in_ch, width, 1, 1, oh, ow)
        return width
    if kind is BlockKind.BASIC:
        tape.conv(f"{name}.conv1", component, in_ch, width, 3, stride, oh, ow)
        tape.conv(f"{name}.conv2", component, width, width, 3, 1, oh, ow)
        out_ch = width
    else:  # bottleneck: the stride lives on the 3x3, so the reduce sees the input grid
        rh, rw = in_hw if downsample else (oh, ow)
        out_ch = 4 * width
        tape.conv(f"{name}.reduce", component, in_ch, width, 1, 1, rh, rw)
        tape.conv(f"{name}.conv", component, width, width, 3, stride, oh, ow)
        tape.conv(f"{name}.expand", component, width, out_ch, 1, 1, oh, ow)
    if downsample or in_ch != out_ch:
        tape.conv(f"{name}.proj", component, in_ch, out_ch, 1, stride, oh, ow)
    return out_ch


def enumerate_layers(arch: DetectorArch, input_size: tuple[int, int] = DEFAULT_INPUT) -> list[Layer]:
    """Every conv (and pool) of the detector, in forward order."""
    grids = _grids(input_size)
    tape = _Tape()
    bb = arch.backbone
    w1 = bb.stem_width

    if bb.block is BlockKind.DEPTHWISE:
        tape.conv("stem.conv", "stem", 3, w1, 3, 2, *grids[2])
    else:
        half = w1 // 2
        tape.conv("stem.conv1", "stem", 3, half, 3, 2, *grids[2])
        tape.conv("stem.conv2", "stem", half, half, 3, 1, *grids[2])
        tape.conv("stem.conv3", "stem", half, w1, 3, 1, *grids[2])
        tape.pool("stem.pool", "stem", w1, 3, 2, *grids[4])

    in_ch = w1
    for i, (name, depth, width) in enumerate(zip(STAGE_NAMES, bb.depths, bb.widths)):
        stage_stride = 4 * (2 ** i)
        out_hw = grids[stage_stride]
        in_hw = grids[stage_stride // 2] if i > 0 else grids[4 if bb.block is not BlockKind.DEPTHWISE else 2]
        for b in range(depth):
            first = b == 0
            # C2 of a pooled stem is already at stride 4; elsewhere the first block strides.
            downsample = first and (i > 0 or bb.block is BlockKind.DEPTHWISE)
            block_in_hw = in_hw if first else out_hw
            in_ch = _emit_block(tape, f"{name}.b{b}", name, bb.block,
                                in_ch, width, downsample, out_hw, block_in_hw)

    # Neck: laterals from C3..C5 outputs, then fusion/transfer convs.
    n = arch.neck.channels
    src = bb.out_widths[1:]
    for stride, ch in zip(STRIDES, src):
        tape.conv(f"neck.lateral{stride}", "neck", ch, n, 1, 1, *grids[stride])
    for stride in (8, 16):
        tape.conv(f"neck.td{stride}", "neck", n, n, 3, 1, *grids[stride])
    for stride in (16, 32):
        tape.conv(f"neck.transfer{stride}", "neck", n, n, 3, 2, *grids[stride])
        tape.conv(f"neck.bu{stride}", "neck", n, n, 3, 1, *grids[stride])

    _emit_head(tape, arch.head, n, grids)
    return tape.layers


def _emit_head(tape: _Tape, head: HeadConfig, n: int, grids) -> None:
    h, m = head.channels, head.depth
    for stride in STRIDES:
        oh, ow = grids[stride]
        shared = stride == STRIDES[0]  # weights shared across levels: count once
        in_ch = n
        for j in range(m):
            nm = f"head.s{stride}.tower{j}"
            if head.depthwise:
                tape.conv(f"{nm}.dw", "head", in_ch, in_ch, 3, 1, oh, ow,
                          groups=in_ch, count_params=shared)
                tape.conv(f"{nm}.pw", "head", in_ch, h, 1, 1, oh, ow, count_params=shared)
            else:
                tape.conv(nm, "head", in_ch, h, 3, 1, oh, ow, count_params=shared)
            in_ch = h
        tape.conv(f"head.s{stride}.cls", "head", h, CLS_CHANNELS, 3, 1, oh, ow,
                  norm=False, count_params=shared)
        tape.conv(f"head.s{stride}.box", "head", h, BOX_CHANNELS, 3, 1, oh, ow,
                  norm=False, count_params=shared)


@dataclass(frozen=True)
class FlopsBreakdown:
    """Per-component MACs/params with totals and per-total MAC ratios."""

    macs: dict[str, int]
    params: dict[str, int]

    @property
    def total_macs(self) -> int:
        return sum(self.macs.values())

    @property
    def total_params(self) -> int:
        return sum(self.params.values())

    @property
    def ratios(self) -> dict[str, float]:
        total = self.total_macs
        if total <= 0:
            raise ArchError("cannot compute ratios of an empty breakdown")
        return {c: self.macs[c] / total for c in COMPONENTS}

    def to_dict(self) -> dict:
        return {
            "macs": dict(self.macs),
            "params": dict(self.params),
            "total_macs": self.total_macs,
            "total_params": self.total_params,
        }

    @staticmethod
    def from_dict(obj: dict) -> "FlopsBreakdown":
        return FlopsBreakdown(
            {c: int(obj["macs"][c]) for c in COMPONENTS},
            {c: int(obj["params"][c]) for c in COMPONENTS},
        )


def _aggregate(layers: list[Layer]) -> FlopsBreakdown:
    macs = {c: 0 for c in COMPONENTS}
    params = {c: 0 for c in COMPONENTS}
    for l in layers:
        macs[l.component] += l.macs
        params[l.component] += l.params
    return FlopsBreakdown(macs, params)


def detector_flops(arch: DetectorArch, input_size: tuple[int, int] = DEFAULT_INPUT) -> FlopsBreakdown:
    """Full per-component breakdown of the detector at the given input."""
    return _aggregate(enumerate_layers(arch, input_size))


def backbone_flops(cfg: BackboneConfig, input_size: tuple[int, int] = DEFAULT_INPUT) -> dict[str, dict[str, int]]:
    """Stem and per-stage MAC/param fragments of the backbone alone."""
    arch = DetectorArch(cfg, _MIN_NECK, _MIN_HEAD)
    br = detector_flops(arch, input_size)
    return {
        "macs": {c: br.macs[c] for c in BACKBONE_COMPONENTS},
        "params": {c: br.params[c] for c in BACKBONE_COMPONENTS},
    }


def neck_flops(n: int, src_widths: tuple[int, int, int],
               input_size: tuple[int, int] = DEFAULT_INPUT) -> dict[str, int]:
    """MACs/params of the neck given the C3..C5 output widths."""
    grids = _grids(input_size)
    tape = _Tape()
    for stride, ch in zip(STRIDES, src_widths):
        tape.conv(f"neck.lateral{stride}", "neck", ch, n, 1, 1, *grids[stride])
    for stride in (8, 16):
        tape.conv(f"neck.td{stride}", "neck", n, n, 3, 1, *grids[stride])
    for stride in (16, 32):
        tape.conv(f"neck.transfer{stride}", "neck", n, n, 3, 2, *grids[stride])
        tape.conv(f"neck.bu{stride}", "neck", n, n, 3, 1, *grids[stride])
    return {"macs": sum(l.macs for l in tape.layers),
            "params": sum(l.params for l in tape.layers)}


def head_flops(cfg: HeadConfig, n: int,
               input_size: tuple[int, int] = DEFAULT_INPUT) -> dict[str, int]:
    """MACs (all levels) and shared params of the head fed n channels."""
    tape = _Tape()
    _emit_head(tape, cfg, n, _grids(input_size))
    return {"macs": sum(l.macs for l in tape.layers),
            "params": sum(l.params for l in tape.layers)}


def params_count(arch: DetectorArch, input_size: tuple[int, int] = DEFAULT_INPUT) -> dict[str, int]:
    """Per-component parameter counts (input size only affects validation)."""
    return dict(detector_flops(arch, input_size).params)


def component_ratios(breakdown: FlopsBreakdown) -> dict[str, float]:
    """Grouped computation ratios.

    stem/c2..c5 and shallow/deep are fractions of the backbone MACs
    (shallow = stem+C2+C3, deep = C4+C5, summing to 1); backbone/neck/head
    are fractions of the total.
    """
    total = breakdown.total_macs
    if total <= 0:
        raise ArchError("cannot compute ratios of a zero-MAC breakdown")
    m = breakdown.macs
    backbone = sum(m[c] for c in BACKBONE_COMPONENTS)
    shallow = m["stem"] + m["c2"] + m["c3"]
    out = {c: m[c] / backbone for c in BACKBONE_COMPONENTS}
    out["shallow"] = shallow / backbone
    out["deep"] = (backbone - shallow) / backbone
    out["backbone"] = backbone / total
    out["neck"] = m["neck"] / total
    out["head"] = m["head"] / total
    return out


RATIO_COMPONENTS = BACKBONE_COMPONENTS + ("shallow", "deep", "backbone", "neck", "head")
STEP1_COMPONENTS = BACKBONE_COMPONENTS + ("shallow", "deep")
STEP2_COMPONENTS = ("backbone", "neck", "head")


def layer_listing_csv(layers: list[Layer]) -> str:
    """Debug CSV of the layer tape (shared head weights appear once)."""
    buf = io.StringIO()
    buf.write("layer_name,component,in_ch,out_ch,kernel,stride,out_h,out_w,groups,macs,params\n")
    for l in layers:
        buf.write(f"{l.name},{l.component},{l.in_ch},{l.out_ch},{l.kernel},{l.stride},"
                  f"{l.out_h},{l.out_w},{l.groups},{l.macs},{l.params}\n")
    return buf.getvalue()


# Minimal neck/head placeholders for backbone-only accounting.
_MIN_NECK = NeckConfig(8)
_MIN_HEAD = HeadConfig(8, 1)

"""Detector architecture descriptors.

A detector is a stem + four-stage backbone, a path-aggregation neck and a
weight-shared head, evaluated at a fixed three-level anchor setting
(strides 8/16/32, two square anchors per location).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum


class ArchError(ValueError):
    """Raised when an architecture descriptor violates its invariants."""


class BlockKind(str, Enum):
    BASIC = "basic"                # two 3x3 convs, residual
    BOTTLENECK = "bottleneck"      # 1x1 reduce / 3x3 / 1x1 expand (x4), residual
    DEPTHWISE = "depthwise"        # depthwise 3x3 + pointwise 1x1, no residual

    @property
    def expansion(self) -> int:
        return 4 if self is BlockKind.BOTTLENECK else 1


# Fixed detection setting: no anchors on stride 4.
STRIDES = (8, 16, 32)
ANCHOR_SCALES = {8: (16, 32), 16: (64, 128), 32: (256, 512)}
ANCHOR_RATIO = 1.0
ANCHORS_PER_LOCATION = 2

NUM_STAGES = 4
WIDTH_STEP = 8

# Backbone component labels: stem plus stages C2..C5 at strides 4/8/16/32.
STAGE_NAMES = ("c2", "c3", "c4", "c5")
BACKBONE_COMPONENTS = ("stem",) + STAGE_NAMES
COMPONENTS = BACKBONE_COMPONENTS + ("neck", "head")


def _check_width(w: int, label: str, max_w: int = 512) -> None:
    if not isinstance(w, int) or w < WIDTH_STEP or w > max_w or w % WIDTH_STEP != 0:
        raise ArchError(
            f"{label} must be a multiple of {WIDTH_STEP} in [{WIDTH_STEP}, {max_w}], got {w!r}"
        )


@dataclass(frozen=True)
class BackboneConfig:
    """Four stages of (depth, width) sharing one block kind.

    Widths are the 3x3 block widths; bottleneck blocks expand the output to
    4x the stage width. The stem width is tied to the first stage width.
    """

    depths: tuple[int, int, int, int]
    widths: tuple[int, int, int, int]
    block: BlockKind = BlockKind.BASIC

    def __post_init__(self):
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "block", BlockKind(self.block))
        if len(self.depths) != NUM_STAGES or len(self.widths) != NUM_STAGES:
            raise ArchError("backbone needs exactly 4 stages")
        for i, d in enumerate(self.depths):
            if not 1 <= d <= 24:
                raise ArchError(f"stage {i + 1} depth must be in [1, 24], got {d}")
        for i, w in enumerate(self.widths):
            _check_width(w, f"stage {i + 1} width")
        for a, b in zip(self.widths, self.widths[1:]):
            if b < a:
                raise ArchError(f"widths must be non-decreasing, got {self.widths}")

    @property
    def stem_width(self) -> int:
        return self.widths[0]

    @property
    def out_widths(self) -> tuple[int, int, int, int]:
        """Output channels of C2..C5 (block width times expansion)."""
        e = self.block.expansion
        return tuple(w * e for w in self.widths)


@dataclass(frozen=True)
class NeckConfig:
    channels: int

    def __post_init__(self):
        object.__setattr__(self, "channels", int(self.channels))
        _check_width(self.channels, "neck channels", max_w=256)


@dataclass(frozen=True)
class HeadConfig:
    channels: int
    depth: int = 2
    depthwise: bool = False

    def __post_init__(self):
        object.__setattr__(self, "channels", int(self.channels))
        object.__setattr__(self, "depth", int(self.depth))
        _check_width(self.channels, "head channels", max_w=256)
        if not 1 <= self.depth <= 6:
            raise ArchError(f"head depth must be in [1, 6], got {self.depth}")


@dataclass(frozen=True)
class DetectorArch:
    backbone: BackboneConfig
    neck: NeckConfig
    head: HeadConfig

    @property
    def strides(self) -> tuple[int, ...]:
        return STRIDES

    @property
    def anchor_scales(self) -> dict[int, tuple[int, int]]:
        return dict(ANCHOR_SCALES)

    def to_dict(self) -> dict:
        return {
            "backbone": {
                "block": self.backbone.block.value,
                "stages": [[d, w] for d, w in zip(self.backbone.depths, self.backbone.widths)],
            },
            "neck": {"n": self.neck.channels},
            "head": {
                "h": self.head.channels,
                "m": self.head.depth,
                "depthwise": self.head.depthwise,
            },
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @staticmethod
    def from_dict(obj: dict) -> "DetectorArch":
        try:
            stages = obj["backbone"]["stages"]
            depths = tuple(int(s[0]) for s in stages)
            widths = tuple(int(s[1]) for s in stages)
            backbone = BackboneConfig(depths, widths, BlockKind(obj["backbone"]["block"]))
            neck = NeckConfig(int(obj["neck"]["n"]))
            head_obj = obj["head"]
            head = HeadConfig(
                int(head_obj["h"]), int(head_obj["m"]), bool(head_obj.get("depthwise", False))
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise ArchError(f"malformed architecture object: {exc!r}") from exc
        return DetectorArch(backbone, neck, head)

    @staticmethod
    def from_json(text: str) -> "DetectorArch":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ArchError(f"invalid architecture JSON: {exc}") from exc
        return DetectorArch.from_dict(obj)

    def arch_id(self) -> str:
        """Stable content hash of the canonical arch JSON (16 hex chars)."""
        return hashlib.sha256(self.to_json().encode("ascii")).hexdigest()[:16]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# Baseline configurations used throughout the tests and docs. Backbones are
# the stock classification designs at reduced width; see the flop model for
# how each block kind is laid out.
BASELINE_ARCHS = {
    "resnet_2.5gf": DetectorArch(
        BackboneConfig((3, 4, 6, 3), (16, 32, 64, 128), BlockKind.BASIC),
        NeckConfig(48),
        HeadConfig(96, 2),
    ),
    "resnet_10gf": DetectorArch(
        BackboneConfig((3, 4, 6, 3), (32, 64, 128, 256), BlockKind.BASIC),
        NeckConfig(128),
        HeadConfig(160, 2),
    ),
    "resnet_34gf": DetectorArch(
        BackboneConfig((3, 4, 6, 3), (64, 128, 256, 512), BlockKind.BOTTLENECK),
        NeckConfig(128),
        HeadConfig(256, 2),
    ),
    "mobilenet_0.5gf": DetectorArch(
        BackboneConfig((2, 2, 6, 2), (32, 64, 128, 256), BlockKind.DEPTHWISE),
        NeckConfig(32),
        HeadConfig(80, 2, depthwise=True),
    ),
}

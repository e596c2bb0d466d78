"""Random architecture sampling inside a flop regime.

Populations are drawn by rejection sampling: uniform depths d_i <= d_max,
widths as sorted uniform multiples of 8 up to w_max, and uniform neck/head
settings, keeping only architectures whose total MACs fall inside the
regime band (and, for step 2, whose within-backbone stage ratios fall
inside supplied intervals).

Draws are produced in fixed-size batches, each from an SFC64 substream
derived from (seed, batch index), and accepted in draw order, so a
population is a pure function of (seed, spec, regime) no matter how the
batches execute. The batch size is part of that definition and pinned.

The batch arithmetic runs in float64; every term is an exact integer far
below 2^53, so the vectorized totals equal the per-layer integer tape
bit for bit (covered by tests).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

try:  # the jitted batch filter is optional; the numpy path is identical
    import numba
except ImportError:  # pragma: no cover
    numba = None

from .arch import (
    BackboneConfig,
    BlockKind,
    DetectorArch,
    HeadConfig,
    NeckConfig,
    canonical_json,
)
from .flops import DEFAULT_INPUT, FlopsBreakdown, component_ratios, detector_flops

BATCH_SIZE = 1 << 16
# Acceptance at 2.5 G +/- 5% measures ~1e-4 for backbone-only sampling and
# ~1e-6..1e-5 with step-2 ratio constraints, so the cap leaves headroom.
ATTEMPT_CAP_FACTOR = 1_000_000


def _substream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.SFC64([seed, index]))


class RegimeInfeasibleError(RuntimeError):
    def __init__(self, message: str, attempts: int, accepted: int):
        super().__init__(message)
        self.attempts = attempts
        self.accepted = accepted
        self.acceptance_rate = accepted / attempts if attempts else 0.0


@dataclass(frozen=True)
class SearchSpaceSpec:
    d_max: int = 24
    w_max: int = 512
    w_step: int = 8
    n_max: int = 256
    h_max: int = 256
    m_max: int = 6
    monotone_widths: bool = True
    block_kind: BlockKind | None = None  # None: pick by regime policy

    def block_kind_for(self, target_gmacs: float) -> BlockKind:
        """Regime policy: depthwise up to 1 G, basic up to 15 G, bottleneck above."""
        if self.block_kind is not None:
            return self.block_kind
        if target_gmacs <= 1.0:
            return BlockKind.DEPTHWISE
        if target_gmacs <= 15.0:
            return BlockKind.BASIC
        return BlockKind.BOTTLENECK

    def to_dict(self) -> dict:
        return {
            "d_max": self.d_max, "w_max": self.w_max, "w_step": self.w_step,
            "n_max": self.n_max, "h_max": self.h_max, "m_max": self.m_max,
            "monotone_widths": self.monotone_widths,
            "block_kind": self.block_kind.value if self.block_kind else None,
        }


@dataclass(frozen=True)
class FlopRegime:
    target_gmacs: float
    band: float = 0.05

    def __post_init__(self):
        if self.target_gmacs <= 0:
            raise ValueError(f"regime target must be positive, got {self.target_gmacs}")
        if not 0 < self.band < 1:
            raise ValueError(f"regime band must be in (0, 1), got {self.band}")

    @property
    def bounds_macs(self) -> tuple[float, float]:
        t = self.target_gmacs * 1e9
        return t * (1 - self.band), t * (1 + self.band)

    def to_dict(self) -> dict:
        return {"target_gmacs": self.target_gmacs, "band": self.band}


@dataclass
class ArchSample:
    id: str
    arch: DetectorArch
    flops: FlopsBreakdown
    ap: float | None = None

    def to_json_line(self) -> str:
        obj = {"id": self.id, "arch": self.arch.to_dict(), "flops": self.flops.to_dict()}
        if self.ap is not None:
            obj["ap"] = self.ap
        return canonical_json(obj)

    @staticmethod
    def from_json_line(line: str) -> "ArchSample":
        obj = json.loads(line)
        return ArchSample(
            obj["id"],
            DetectorArch.from_dict(obj["arch"]),
            FlopsBreakdown.from_dict(obj["flops"]),
            obj.get("ap"),
        )


def sample_backbone(rng: np.random.Generator, spec: SearchSpaceSpec,
                    block_kind: BlockKind | None = None) -> BackboneConfig:
    d = rng.integers(1, spec.d_max + 1, size=4)
    w = rng.integers(1, spec.w_max // spec.w_step + 1, size=4) * spec.w_step
    if spec.monotone_widths:
        w = np.sort(w)
    kind = block_kind or spec.block_kind or BlockKind.BASIC
    return BackboneConfig(tuple(int(x) for x in d), tuple(int(x) for x in w), kind)


def sample_neck_head(rng: np.random.Generator, spec: SearchSpaceSpec,
                     depthwise_head: bool = False) -> tuple[NeckConfig, HeadConfig]:
    n = int(rng.integers(1, spec.n_max // spec.w_step + 1)) * spec.w_step
    h = int(rng.integers(1, spec.h_max // spec.w_step + 1)) * spec.w_step
    m = int(rng.integers(1, spec.m_max + 1))
    return NeckConfig(n), HeadConfig(h, m, depthwise_head)


def _areas(input_size: tuple[int, int]) -> tuple[float, list[float]]:
    iw, ih = input_size
    return float((iw // 2) * (ih // 2)), [float((iw // s) * (ih // s)) for s in (4, 8, 16, 32)]


def backbone_macs_vec(d: np.ndarray, w: np.ndarray, kind: BlockKind,
                      input_size: tuple[int, int] = DEFAULT_INPUT) -> dict[str, np.ndarray]:
    """Per-stage MAC totals for (N, 4) depth/width arrays (exact, float64)."""
    a_stem, areas = _areas(input_size)
    d = d.astype(np.float64, copy=False)
    w = w.astype(np.float64, copy=False)
    w1, w2, w3, w4 = (w[:, i] for i in range(4))
    d1, d2, d3, d4 = (d[:, i] for i in range(4))
    out: dict[str, np.ndarray] = {}

    if kind is BlockKind.DEPTHWISE:
        out["stem"] = a_stem * 27.0 * w1
        prev = w1
        for name, a, di, wi in zip(("c2", "c3", "c4", "c5"), areas,
                                   (d1, d2, d3, d4), (w1, w2, w3, w4)):
            out[name] = a * (9.0 * prev + prev * wi) + (di - 1) * a * (9.0 * wi + wi * wi)
            prev = wi
    elif kind is BlockKind.BASIC:
        half = w1 * 0.5  # widths are multiples of 8, so this stays integral
        out["stem"] = a_stem * 9.0 * (3.0 * half + half * half + half * w1)
        out["c2"] = areas[0] * d1 * 18.0 * w1 * w1
        prev = w1
        for name, a, di, wi in zip(("c3", "c4", "c5"), areas[1:], (d2, d3, d4), (w2, w3, w4)):
            out[name] = (a * (9.0 * wi * prev + 9.0 * wi * wi + wi * prev)
                         + (di - 1) * 18.0 * a * wi * wi)
            prev = wi
    else:  # bottleneck: 3x3 width w_i, output 4*w_i; reduce runs on the input grid
        half = w1 * 0.5
        out["stem"] = a_stem * 9.0 * (3.0 * half + half * half + half * w1)
        out["c2"] = areas[0] * (18.0 * w1 * w1 + (d1 - 1) * 17.0 * w1 * w1)
        prev = w1
        for name, a, di, wi in zip(("c3", "c4", "c5"), areas[1:], (d2, d3, d4), (w2, w3, w4)):
            prev_out = 4.0 * prev
            out[name] = (a * (8.0 * wi * prev_out + 13.0 * wi * wi)
                         + (di - 1) * 17.0 * a * wi * wi)
            prev = wi
    return out


def neck_head_macs_vec(w: np.ndarray, n: np.ndarray, h: np.ndarray, m: np.ndarray,
                       kind: BlockKind, depthwise_head: bool,
                       input_size: tuple[int, int] = DEFAULT_INPUT
                       ) -> tuple[np.ndarray, np.ndarray]:
    """(neck, head) MAC totals; w is the (N, 4) width array of the backbone."""
    _, areas = _areas(input_size)
    a2, a3, a4 = areas[1], areas[2], areas[3]
    w = w.astype(np.float64, copy=False)
    n = n.astype(np.float64, copy=False)
    h = h.astype(np.float64, copy=False)
    m = m.astype(np.float64, copy=False)
    e = 4.0 if kind is BlockKind.BOTTLENECK else 1.0
    neck = (n * (a2 * e * w[:, 1] + a3 * e * w[:, 2] + a4 * e * w[:, 3])
            + 9.0 * n * n * (a2 + 3.0 * a3 + 2.0 * a4))
    s = a2 + a3 + a4
    if depthwise_head:
        head = s * (9.0 * n + n * h) + (m - 1) * s * (9.0 * h + h * h) + 90.0 * s * h
    else:
        head = 9.0 * s * (n * h + (m - 1) * h * h + 10.0 * h)
    return neck, head


def component_macs_vec(d, w, n, h, m, kind: BlockKind, depthwise_head: bool,
                       input_size: tuple[int, int] = DEFAULT_INPUT) -> dict[str, np.ndarray]:
    """All seven component MAC totals; agrees exactly with the layer tape."""
    out = backbone_macs_vec(np.asarray(d), np.asarray(w), kind, input_size)
    neck, head = neck_head_macs_vec(np.asarray(w), np.asarray(n), np.asarray(h),
                                    np.asarray(m), kind, depthwise_head, input_size)
    out["neck"] = neck
    out["head"] = head
    return out


_KIND_IDS = {BlockKind.BASIC: 0, BlockKind.BOTTLENECK: 1, BlockKind.DEPTHWISE: 2}


def _filter_numpy(d, w, kind, input_size, hi, ranges_lo, ranges_hi):
    stages = backbone_macs_vec(d, w, kind, input_size)
    bb = stages["stem"] + stages["c2"] + stages["c3"] + stages["c4"] + stages["c5"]
    ok = bb <= hi
    if ranges_lo is not None:
        for i, name in enumerate(("stem", "c2", "c3", "c4", "c5")):
            x = stages[name] / bb
            ok &= (x >= ranges_lo[i]) & (x <= ranges_hi[i])
    return ok, bb


if numba is not None:
    @numba.njit(cache=True, fastmath=False)
    def _sort4_scale(w, step):  # pragma: no cover - covered via population equality
        for i in range(w.shape[0]):
            a, b, c, e = w[i, 0], w[i, 1], w[i, 2], w[i, 3]
            if a > b: a, b = b, a
            if c > e: c, e = e, c
            if a > c: a, c = c, a
            if b > e: b, e = e, b
            if b > c: b, c = c, b
            w[i, 0] = a * step
            w[i, 1] = b * step
            w[i, 2] = c * step
            w[i, 3] = e * step

    @numba.njit(cache=True, fastmath=False)
    def _filter_jit(kind_id, d, w, a_stem, a1, a2, a3, a4, hi,
                    use_ranges, rlo, rhi, ok, bb_out):  # pragma: no cover - numpy twin is tested equal
        for i in range(d.shape[0]):
            d1, d2, d3, d4 = float(d[i, 0]), float(d[i, 1]), float(d[i, 2]), float(d[i, 3])
            w1, w2, w3, w4 = float(w[i, 0]), float(w[i, 1]), float(w[i, 2]), float(w[i, 3])
            if kind_id == 2:
                s0 = a_stem * 27.0 * w1
                s1 = a1 * (9.0 * w1 + w1 * w1) + (d1 - 1.0) * a1 * (9.0 * w1 + w1 * w1)
                s2 = a2 * (9.0 * w1 + w1 * w2) + (d2 - 1.0) * a2 * (9.0 * w2 + w2 * w2)
                s3 = a3 * (9.0 * w2 + w2 * w3) + (d3 - 1.0) * a3 * (9.0 * w3 + w3 * w3)
                s4 = a4 * (9.0 * w3 + w3 * w4) + (d4 - 1.0) * a4 * (9.0 * w4 + w4 * w4)
            elif kind_id == 0:
                half = w1 * 0.5
                s0 = a_stem * 9.0 * (3.0 * half + half * half + half * w1)
                s1 = a1 * d1 * 18.0 * w1 * w1
                s2 = a2 * (9.0 * w2 * w1 + 9.0 * w2 * w2 + w2 * w1) + (d2 - 1.0) * 18.0 * a2 * w2 * w2
                s3 = a3 * (9.0 * w3 * w2 + 9.0 * w3 * w3 + w3 * w2) + (d3 - 1.0) * 18.0 * a3 * w3 * w3
                s4 = a4 * (9.0 * w4 * w3 + 9.0 * w4 * w4 + w4 * w3) + (d4 - 1.0) * 18.0 * a4 * w4 * w4
            else:
                half = w1 * 0.5
                s0 = a_stem * 9.0 * (3.0 * half + half * half + half * w1)
                s1 = a1 * (18.0 * w1 * w1 + (d1 - 1.0) * 17.0 * w1 * w1)
                s2 = a2 * (32.0 * w2 * w1 + 13.0 * w2 * w2) + (d2 - 1.0) * 17.0 * a2 * w2 * w2
                s3 = a3 * (32.0 * w3 * w2 + 13.0 * w3 * w3) + (d3 - 1.0) * 17.0 * a3 * w3 * w3
                s4 = a4 * (32.0 * w4 * w3 + 13.0 * w4 * w4) + (d4 - 1.0) * 17.0 * a4 * w4 * w4
            bb = s0 + s1 + s2 + s3 + s4
            bb_out[i] = bb
            good = bb <= hi
            if use_ranges and good:
                # same div-then-compare as the numpy twin, for bit equality
                x0, x1, x2 = s0 / bb, s1 / bb, s2 / bb
                x3, x4 = s3 / bb, s4 / bb
                good = (x0 >= rlo[0]) and (x0 <= rhi[0]) \
                    and (x1 >= rlo[1]) and (x1 <= rhi[1]) \
                    and (x2 >= rlo[2]) and (x2 <= rhi[2]) \
                    and (x3 >= rlo[3]) and (x3 <= rhi[3]) \
                    and (x4 >= rlo[4]) and (x4 <= rhi[4])
            ok[i] = good


def _batch_filter(d, w, kind, input_size, hi, ranges_lo, ranges_hi):
    """(qualifies, backbone_total) for a drawn batch; jitted when available."""
    if numba is None:
        return _filter_numpy(d, w, kind, input_size, hi, ranges_lo, ranges_hi)
    a_stem, areas = _areas(input_size)
    ok = np.empty(len(d), dtype=np.bool_)
    bb = np.empty(len(d), dtype=np.float64)
    use_ranges = ranges_lo is not None
    zeros = np.zeros(5)
    _filter_jit(_KIND_IDS[kind], d, w, a_stem, *areas, float(hi), use_ranges,
                ranges_lo if use_ranges else zeros,
                ranges_hi if use_ranges else zeros, ok, bb)
    return ok, bb


# Neck/head re-draws per qualifying backbone. Higher is faster near tight
# ratio constraints but lets accepted samples share backbones more often;
# 8 keeps sharing rare while still collapsing the step-2 rejection cost.
NH_DRAWS_PER_BACKBONE = 8


def generate_population(seed: int, spec: SearchSpaceSpec, regime: FlopRegime,
                        count: int = 320,
                        fixed_neck_head: tuple[int, int, int] | None = None,
                        backbone_ranges: dict[str, tuple[float, float]] | None = None,
                        input_size: tuple[int, int] = DEFAULT_INPUT,
                        attempt_cap: int | None = None) -> list[ArchSample]:
    """Exactly `count` in-regime ArchSamples, deterministic in (seed, spec, regime).

    `fixed_neck_head` pins (n, h, m) for the backbone-only step; on step 2,
    `backbone_ranges` maps stem/c2..c5 to within-backbone ratio intervals
    every accepted sample must satisfy. Duplicate configurations are
    skipped. Raises RegimeInfeasibleError once the attempt cap is spent.

    When the neck/head is free, every qualifying backbone is paired with
    NH_DRAWS_PER_BACKBONE independent (n, h, m) draws. Each valid
    (backbone, neck/head) pair is still emitted with equal probability, so
    the accepted population follows the same law as one-draw-per-attempt
    rejection while spending far fewer backbone draws near tight regimes.
    """
    kind = spec.block_kind_for(regime.target_gmacs)
    depthwise_head = kind is BlockKind.DEPTHWISE
    lo, hi = regime.bounds_macs
    cap = attempt_cap if attempt_cap is not None else ATTEMPT_CAP_FACTOR * count
    if backbone_ranges is not None:
        unknown = set(backbone_ranges) - {"stem", "c2", "c3", "c4", "c5"}
        if unknown:
            raise ValueError(f"backbone_ranges has unknown components: {sorted(unknown)}")
    repeats = 1 if fixed_neck_head is not None else NH_DRAWS_PER_BACKBONE
    if backbone_ranges is not None:
        ranges_lo = np.array([backbone_ranges.get(c, (0.0, 1.0))[0]
                              for c in ("stem", "c2", "c3", "c4", "c5")])
        ranges_hi = np.array([backbone_ranges.get(c, (0.0, 1.0))[1]
                              for c in ("stem", "c2", "c3", "c4", "c5")])
    else:
        ranges_lo = ranges_hi = None

    samples: list[ArchSample] = []
    seen: set[str] = set()
    attempts = 0
    batch_index = 0
    while len(samples) < count:
        if attempts >= cap:
            raise RegimeInfeasibleError(
                f"gave up after {attempts} draws with {len(samples)}/{count} accepted "
                f"(acceptance rate {len(samples) / max(attempts, 1):.2e}); "
                "widen the regime band or relax the ratio constraints",
                attempts, len(samples),
            )
        size = min(BATCH_SIZE, cap - attempts)
        rng = _substream(seed, batch_index)
        d = rng.integers(1, spec.d_max + 1, size=(size, 4), dtype=np.uint32)
        w = rng.integers(1, spec.w_max // spec.w_step + 1, size=(size, 4), dtype=np.uint32)
        if spec.monotone_widths:
            if numba is not None:
                _sort4_scale(w, np.uint32(spec.w_step))
            else:
                w.sort(axis=1)
                w *= np.uint32(spec.w_step)
        else:
            w *= np.uint32(spec.w_step)

        # backbone-only filter: ratio membership plus "can still fit the band"
        ok, bb_total = _batch_filter(d, w, kind, input_size, hi, ranges_lo, ranges_hi)
        rows = np.flatnonzero(ok)
        # neck/head settings are drawn only for rows that can still qualify
        rows = np.repeat(rows, repeats)
        if fixed_neck_head is None:
            n = rng.integers(1, spec.n_max // spec.w_step + 1, size=len(rows),
                             dtype=np.uint32) * np.uint32(spec.w_step)
            h = rng.integers(1, spec.h_max // spec.w_step + 1, size=len(rows),
                             dtype=np.uint32) * np.uint32(spec.w_step)
            m = rng.integers(1, spec.m_max + 1, size=len(rows), dtype=np.uint32)
        else:
            n = np.full(len(rows), fixed_neck_head[0], dtype=np.uint32)
            h = np.full(len(rows), fixed_neck_head[1], dtype=np.uint32)
            m = np.full(len(rows), fixed_neck_head[2], dtype=np.uint32)
        neck, head = neck_head_macs_vec(w[rows], n, h, m, kind, depthwise_head, input_size)
        total = bb_total[rows] + neck + head
        in_band = (total >= lo) & (total <= hi)

        for j in np.flatnonzero(in_band):
            i = rows[j]
            arch = DetectorArch(
                BackboneConfig(tuple(int(x) for x in d[i]), tuple(int(x) for x in w[i]), kind),
                NeckConfig(int(n[j])),
                HeadConfig(int(h[j]), int(m[j]), depthwise_head),
            )
            arch_id = arch.arch_id()
            if arch_id in seen:
                continue  # duplicate configuration: keep drawing
            seen.add(arch_id)
            samples.append(ArchSample(arch_id, arch, detector_flops(arch, input_size)))
            if len(samples) == count:
                break
        attempts += size
        batch_index += 1
    return samples


def population_ratios(samples: Iterable[ArchSample]) -> list[dict[str, float]]:
    return [component_ratios(s.flops) for s in samples]


def write_population(samples: Iterable[ArchSample], path) -> None:
    with open(path, "w", encoding="ascii") as f:
        for s in samples:
            f.write(s.to_json_line() + "\n")


def read_population(path) -> list[ArchSample]:
    out = []
    with open(path, "r", encoding="ascii") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(ArchSample.from_json_line(line))
    return out

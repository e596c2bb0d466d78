"""Empirical-bootstrap estimation of best-model computation-ratio ranges.

Each replicate resamples a fraction of the scored population with
replacement and records the ratio of its best-scoring member; the reported
interval is the central quantile range of those best-ratios.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .flops import RATIO_COMPONENTS, component_ratios
from .sampling import ArchSample

DEFAULT_REPLICATES = 1000
DEFAULT_SUBSAMPLE = 0.25
DEFAULT_CONFIDENCE = 0.95


@dataclass(frozen=True)
class ScoredPair:
    x: float
    ap: float
    sample_id: str = ""

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise ValueError(f"ratio x must be in [0, 1], got {self.x}")


@dataclass(frozen=True)
class BootstrapRange:
    component: str
    low: float
    high: float
    confidence: float
    replicates: int
    subsample_frac: float
    degenerate: bool = False  # all scores identical: interval carries no signal

    def to_dict(self) -> dict:
        return {
            "component": self.component, "low": self.low, "high": self.high,
            "confidence": self.confidence, "replicates": self.replicates,
            "subsample_frac": self.subsample_frac, "degenerate": self.degenerate,
        }

    @staticmethod
    def from_dict(obj: dict) -> "BootstrapRange":
        return BootstrapRange(obj["component"], obj["low"], obj["high"],
                              obj["confidence"], obj["replicates"],
                              obj["subsample_frac"], obj.get("degenerate", False))


def _best_rank_order(xs: np.ndarray, aps: np.ndarray, ids: Sequence[str]) -> np.ndarray:
    """rank[i] = position of pair i when sorted best-first (max ap, ties by id)."""
    order = sorted(range(len(xs)), key=lambda i: (-aps[i], ids[i]))
    rank = np.empty(len(xs), dtype=np.int64)
    for pos, i in enumerate(order):
        rank[i] = pos
    return rank


def empirical_bootstrap(pairs: Sequence[ScoredPair], seed: int,
                        replicates: int = DEFAULT_REPLICATES,
                        subsample_frac: float = DEFAULT_SUBSAMPLE,
                        confidence: float = DEFAULT_CONFIDENCE,
                        component: str = "x") -> BootstrapRange:
    """Central `confidence` quantile range of per-replicate best-pair ratios.

    Every replicate draws ceil(subsample_frac * N) pairs with replacement;
    ties on ap break toward the smaller sample_id. Quantiles use linear
    (type-7) interpolation. Deterministic in (seed, inputs); replicate r
    always consumes row r of one seed-derived index matrix, so evaluation
    order cannot change the result.
    """
    n = len(pairs)
    if n < 2:
        raise ValueError(f"need at least 2 scored pairs, got {n}")
    if not 0 < subsample_frac <= 1:
        raise ValueError(f"subsample_frac must be in (0, 1], got {subsample_frac}")
    if not 0 < confidence < 1:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")

    xs = np.asarray([p.x for p in pairs], dtype=np.float64)
    aps = np.asarray([p.ap for p in pairs], dtype=np.float64)
    ids = [p.sample_id for p in pairs]
    rank = _best_rank_order(xs, aps, ids)
    x_by_rank = np.empty(n, dtype=np.float64)
    x_by_rank[rank] = xs

    draws = int(np.ceil(subsample_frac * n))
    rng = np.random.default_rng([seed, 0x626F6F74])  # fixed stream tag
    idx = rng.integers(0, n, size=(replicates, draws))
    best_rank = rank[idx].min(axis=1)
    best_x = x_by_rank[best_rank]

    alpha = (1.0 - confidence) / 2.0
    low, high = np.quantile(best_x, [alpha, 1.0 - alpha], method="linear")
    degenerate = bool(np.all(aps == aps[0]))
    return BootstrapRange(component, float(low), float(high), confidence,
                          replicates, subsample_frac, degenerate)


def range_report(samples: Iterable[ArchSample], seed: int,
                 components: Sequence[str] | None = None,
                 replicates: int = DEFAULT_REPLICATES,
                 subsample_frac: float = DEFAULT_SUBSAMPLE,
                 confidence: float = DEFAULT_CONFIDENCE) -> list[BootstrapRange]:
    """One BootstrapRange per ratio component over a fully scored population."""
    samples = list(samples)
    unscored = [s.id for s in samples if s.ap is None]
    if unscored:
        raise ValueError(f"population has {len(unscored)} unscored samples: "
                         f"{unscored[:5]}{'...' if len(unscored) > 5 else ''}")
    components = list(components) if components is not None else list(RATIO_COMPONENTS)
    unknown = set(components) - set(RATIO_COMPONENTS)
    if unknown:
        raise ValueError(f"unknown ratio components: {sorted(unknown)}")

    ratios = [component_ratios(s.flops) for s in samples]
    out = []
    for comp in components:
        pairs = [ScoredPair(r[comp], s.ap, s.id) for r, s in zip(ratios, samples)]
        out.append(empirical_bootstrap(pairs, seed, replicates, subsample_frac,
                                       confidence, component=comp))
    return out


def ranges_to_dict(ranges: Sequence[BootstrapRange]) -> dict:
    return {
        "ranges": [r.to_dict() for r in ranges],
        "params": {
            "replicates": ranges[0].replicates if ranges else DEFAULT_REPLICATES,
            "subsample_frac": ranges[0].subsample_frac if ranges else DEFAULT_SUBSAMPLE,
            "confidence": ranges[0].confidence if ranges else DEFAULT_CONFIDENCE,
        },
    }


def ranges_from_dict(obj: dict) -> list[BootstrapRange]:
    return [BootstrapRange.from_dict(v) for v in obj["ranges"]]


def ranges_to_csv(ranges: Sequence[BootstrapRange]) -> str:
    lines = ["component,low,high,replicates,subsample_frac,confidence,degenerate"]
    for r in ranges:
        lines.append(f"{r.component},{r.low!r},{r.high!r},{r.replicates},"
                     f"{r.subsample_frac!r},{r.confidence!r},{int(r.degenerate)}")
    return "\n".join(lines) + "\n"

"""Scoring seam for sampled architectures.

Training-and-evaluating candidates is outside this artifact; scores enter
through this interface instead, either as externally measured AP tables
(CSV keyed by arch id) or as synthetic surrogates for testing the search
machinery end to end.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .arch import DetectorArch
from .flops import component_ratios, detector_flops


class EvaluatorError(RuntimeError):
    def __init__(self, message: str, missing_ids: list[str] | None = None):
        super().__init__(message)
        self.missing_ids = missing_ids or []


class Evaluator(Protocol):
    def score(self, arch_id: str, arch: DetectorArch) -> float: ...


@dataclass(frozen=True)
class ConstantStub:
    value: float = 0.5

    def score(self, arch_id: str, arch: DetectorArch) -> float:
        return self.value

    def describe(self) -> dict:
        return {"kind": "constant", "value": self.value}


class CsvLookup:
    """Externally measured scores from an `arch_id,ap` CSV with a header row."""

    def __init__(self, table: dict[str, float]):
        self.table = dict(table)

    @staticmethod
    def from_file(path) -> "CsvLookup":
        table = {}
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None or [c.strip() for c in header[:2]] != ["arch_id", "ap"]:
                raise EvaluatorError(f"scores CSV needs an 'arch_id,ap' header, got {header}")
            for row in reader:
                if not row:
                    continue
                table[row[0]] = float(row[1])
        return CsvLookup(table)

    def score(self, arch_id: str, arch: DetectorArch) -> float:
        try:
            return self.table[arch_id]
        except KeyError:
            raise EvaluatorError(f"no score for arch {arch_id}", [arch_id]) from None

    def missing(self, ids) -> list[str]:
        return [i for i in ids if i not in self.table]

    def describe(self) -> dict:
        return {"kind": "csv", "entries": len(self.table)}


@dataclass(frozen=True)
class SyntheticSurrogate:
    """Smooth unimodal score over (shallow ratio, backbone ratio) plus seeded noise.

    The peak rewards architectures whose backbone leans shallow and whose
    budget leans toward the backbone. Noise is deterministic per
    (seed, arch id) so scoring order never matters.
    """

    peak_shallow: float = 0.85
    peak_backbone: float = 0.75
    width_shallow: float = 0.06
    width_backbone: float = 0.35
    base: float = 0.3
    amplitude: float = 0.5
    noise: float = 0.0
    seed: int = 0
    input_size: tuple[int, int] = (640, 480)

    def score_ratios(self, shallow: float, backbone: float) -> float:
        z = ((shallow - self.peak_shallow) ** 2 / (2 * self.width_shallow ** 2)
             + (backbone - self.peak_backbone) ** 2 / (2 * self.width_backbone ** 2))
        return self.base + self.amplitude * math.exp(-z)

    def score(self, arch_id: str, arch: DetectorArch) -> float:
        ratios = component_ratios(detector_flops(arch, self.input_size))
        ap = self.score_ratios(ratios["shallow"], ratios["backbone"])
        if self.noise > 0:
            rng = np.random.default_rng([self.seed, int(arch_id[:15], 16)])
            ap += self.noise * float(rng.standard_normal())
        return float(min(max(ap, 0.0), 1.0))

    def describe(self) -> dict:
        return {
            "kind": "surrogate",
            "peak_shallow": self.peak_shallow, "peak_backbone": self.peak_backbone,
            "width_shallow": self.width_shallow, "width_backbone": self.width_backbone,
            "base": self.base, "amplitude": self.amplitude,
            "noise": self.noise, "seed": self.seed,
        }


def make_evaluator(spec: dict) -> Evaluator:
    """Build an evaluator from its config mapping (kind + parameters)."""
    kind = spec.get("kind")
    params = {k: v for k, v in spec.items() if k != "kind"}
    if kind == "constant":
        return ConstantStub(**params)
    if kind == "csv":
        return CsvLookup.from_file(params["path"])
    if kind == "surrogate":
        if "input_size" in params:
            params["input_size"] = tuple(params["input_size"])
        return SyntheticSurrogate(**params)
    raise EvaluatorError(f"unknown evaluator kind {kind!r}")

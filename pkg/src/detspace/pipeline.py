"""Two-step computation-redistribution search orchestration.

Step 1 searches the backbone split with the neck and head pinned; step 2
frees the neck/head settings while keeping the per-stage backbone ratios
inside the step-1 bootstrap ranges. Every run persists its population,
ranges and best sample as byte-stable JSON artifacts.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field
from pathlib import Path

from .arch import BlockKind, canonical_json
from .bootstrap import (
    DEFAULT_CONFIDENCE,
    DEFAULT_REPLICATES,
    DEFAULT_SUBSAMPLE,
    BootstrapRange,
    range_report,
    ranges_from_dict,
    ranges_to_dict,
)
from .evaluators import Evaluator, EvaluatorError
from .flops import BACKBONE_COMPONENTS, STEP1_COMPONENTS, STEP2_COMPONENTS
from .sampling import (
    ArchSample,
    FlopRegime,
    SearchSpaceSpec,
    generate_population,
    read_population,
    write_population,
)

DEFAULT_STEP1_NECK_HEAD = (32, 96, 2)  # pinned (n, h, m) while searching the backbone


@dataclass(frozen=True)
class SearchConfig:
    seed: int = 0
    count: int = 320
    regime: FlopRegime = field(default_factory=lambda: FlopRegime(2.5))
    space: SearchSpaceSpec = field(default_factory=SearchSpaceSpec)
    neck_head: tuple[int, int, int] = DEFAULT_STEP1_NECK_HEAD
    replicates: int = DEFAULT_REPLICATES
    subsample_frac: float = DEFAULT_SUBSAMPLE
    confidence: float = DEFAULT_CONFIDENCE
    input_size: tuple[int, int] = (640, 480)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed, "count": self.count,
            "regime": self.regime.to_dict(), "space": self.space.to_dict(),
            "neck_head": list(self.neck_head),
            "bootstrap": {
                "replicates": self.replicates,
                "subsample_frac": self.subsample_frac,
                "confidence": self.confidence,
            },
            "input_size": list(self.input_size),
        }


@dataclass
class RunRecord:
    step: str  # step1 | step2 | baseline
    config: SearchConfig
    population: list[ArchSample]
    ranges: list[BootstrapRange]
    best: ArchSample
    evaluator_info: dict = field(default_factory=dict)
    run_dir: Path | None = None

    def ranges_by_component(self) -> dict[str, BootstrapRange]:
        return {r.component: r for r in self.ranges}

    def backbone_ranges(self) -> dict[str, tuple[float, float]]:
        by_comp = self.ranges_by_component()
        return {c: (by_comp[c].low, by_comp[c].high) for c in BACKBONE_COMPONENTS}


def score_population(population: list[ArchSample], evaluator: Evaluator) -> None:
    """Attach evaluator scores in place; aggregate unscored ids into one error."""
    missing: list[str] = []
    for s in population:
        try:
            s.ap = float(evaluator.score(s.id, s.arch))
        except EvaluatorError as exc:
            missing.extend(exc.missing_ids or [s.id])
    if missing:
        raise EvaluatorError(
            f"evaluator left {len(missing)} samples unscored: "
            f"{missing[:5]}{'...' if len(missing) > 5 else ''}", missing)


def select_best(population: list[ArchSample]) -> ArchSample:
    """Max-ap sample; ties by lower total MACs, then lower id."""
    scored = [s for s in population if s.ap is not None]
    if not scored:
        raise ValueError("population has no scored samples")
    return min(scored, key=lambda s: (-s.ap, s.flops.total_macs, s.id))


def _run(step: str, config: SearchConfig, evaluator: Evaluator,
         components, fixed_neck_head, backbone_ranges, out_dir) -> RunRecord:
    population = generate_population(
        config.seed, config.space, config.regime, config.count,
        fixed_neck_head=fixed_neck_head, backbone_ranges=backbone_ranges,
        input_size=config.input_size)
    score_population(population, evaluator)
    ranges = range_report(population, config.seed, components,
                          config.replicates, config.subsample_frac, config.confidence)
    record = RunRecord(step, config, population, ranges, select_best(population),
                       getattr(evaluator, "describe", dict)())
    if out_dir is not None:
        save_run(record, out_dir)
    return record


def run_step1(config: SearchConfig, evaluator: Evaluator, out_dir=None) -> RunRecord:
    """Backbone-only search: neck/head pinned, per-stage + shallow/deep ranges."""
    return _run("step1", config, evaluator, STEP1_COMPONENTS,
                fixed_neck_head=config.neck_head, backbone_ranges=None, out_dir=out_dir)


def run_step2(config: SearchConfig, step1: RunRecord, evaluator: Evaluator,
              out_dir=None) -> RunRecord:
    """Whole-detector search constrained to the step-1 backbone distribution."""
    if step1.step != "step1":
        raise ValueError(f"run_step2 needs a step1 record, got {step1.step!r}")
    return _run("step2", config, evaluator, STEP2_COMPONENTS,
                fixed_neck_head=None, backbone_ranges=step1.backbone_ranges(),
                out_dir=out_dir)


def run_unconstrained(config: SearchConfig, evaluator: Evaluator, out_dir=None) -> RunRecord:
    """Free sampling over the whole space; the one-step comparison baseline."""
    return _run("baseline", config, evaluator, STEP1_COMPONENTS + STEP2_COMPONENTS,
                fixed_neck_head=None, backbone_ranges=None, out_dir=out_dir)


def save_run(record: RunRecord, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config_obj = {
        "step": record.step,
        "config": record.config.to_dict(),
        "evaluator": record.evaluator_info,
    }
    (out / "config.json").write_text(canonical_json(config_obj) + "\n", encoding="ascii")
    write_population(record.population, out / "population.jsonl")
    (out / "ranges.json").write_text(canonical_json(ranges_to_dict(record.ranges)) + "\n",
                                     encoding="ascii")
    (out / "best.json").write_text(record.best.to_json_line() + "\n", encoding="ascii")
    # wall-clock bookkeeping lives outside the deterministic artifacts
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    with open(out / "run.log", "a", encoding="ascii") as f:
        f.write(f"{stamp} {record.step} count={len(record.population)} "
                f"best={record.best.id} ap={record.best.ap}\n")
    record.run_dir = out
    return out


def load_run(run_dir) -> RunRecord:
    run_dir = Path(run_dir)
    try:
        config_obj = json.loads((run_dir / "config.json").read_text())
        population = read_population(run_dir / "population.jsonl")
        ranges = ranges_from_dict(json.loads((run_dir / "ranges.json").read_text()))
        best = ArchSample.from_json_line((run_dir / "best.json").read_text())
    except FileNotFoundError as exc:
        raise FileNotFoundError(f"{run_dir} is not a run directory: {exc}") from exc
    cfg = config_obj["config"]
    space_cfg = dict(cfg["space"])
    block_kind = space_cfg.pop("block_kind", None)
    space = SearchSpaceSpec(**space_cfg,
                            block_kind=BlockKind(block_kind) if block_kind else None)
    config = SearchConfig(
        seed=cfg["seed"], count=cfg["count"],
        regime=FlopRegime(cfg["regime"]["target_gmacs"], cfg["regime"]["band"]),
        space=space,
        neck_head=tuple(cfg["neck_head"]),
        replicates=cfg["bootstrap"]["replicates"],
        subsample_frac=cfg["bootstrap"]["subsample_frac"],
        confidence=cfg["bootstrap"]["confidence"],
        input_size=tuple(cfg["input_size"]),
    )
    return RunRecord(config_obj["step"], config, population, ranges, best,
                     config_obj.get("evaluator", {}), run_dir)

import json

import numpy as np
import pytest

from detspace.arch import BASELINE_ARCHS
from detspace.evaluators import (
    ConstantStub,
    CsvLookup,
    EvaluatorError,
    SyntheticSurrogate,
    make_evaluator,
)
from detspace.flops import component_ratios, detector_flops
from detspace.pipeline import (
    RunRecord,
    SearchConfig,
    load_run,
    run_step1,
    run_step2,
    run_unconstrained,
    save_run,
    select_best,
    score_population,
)
from detspace.sampling import ArchSample, FlopRegime, generate_population

# small populations keep the module tests quick; the acceptance suite runs full size
FAST = SearchConfig(seed=77, count=24, replicates=300)


@pytest.fixture(scope="module")
def step1_record():
    return run_step1(FAST, SyntheticSurrogate())


class TestEvaluators:
    def test_constant_stub(self):
        arch = BASELINE_ARCHS["resnet_2.5gf"]
        assert ConstantStub(0.4).score(arch.arch_id(), arch) == 0.4

    def test_surrogate_depends_only_on_ratios(self):
        ev = SyntheticSurrogate()
        a = BASELINE_ARCHS["resnet_2.5gf"]
        assert ev.score(a.arch_id(), a) == ev.score(a.arch_id(), a)
        r = component_ratios(detector_flops(a))
        assert ev.score(a.arch_id(), a) == pytest.approx(
            ev.score_ratios(r["shallow"], r["backbone"]))

    def test_surrogate_peak_is_maximal(self):
        ev = SyntheticSurrogate(noise=0.0)
        peak = ev.score_ratios(ev.peak_shallow, ev.peak_backbone)
        rng = np.random.default_rng(0)
        for _ in range(200):
            assert ev.score_ratios(float(rng.random()), float(rng.random())) <= peak

    def test_surrogate_noise_deterministic_per_arch(self):
        ev = SyntheticSurrogate(noise=0.05, seed=3)
        a = BASELINE_ARCHS["resnet_2.5gf"]
        b = BASELINE_ARCHS["resnet_10gf"]
        assert ev.score(a.arch_id(), a) == ev.score(a.arch_id(), a)
        assert ev.score(a.arch_id(), a) != ev.score(b.arch_id(), b)

    def test_csv_lookup_roundtrip(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("arch_id,ap\nabc,0.5\ndef,0.25\n")
        ev = CsvLookup.from_file(path)
        assert ev.score("abc", None) == 0.5
        with pytest.raises(EvaluatorError):
            ev.score("zzz", None)
        assert ev.missing(["abc", "zzz"]) == ["zzz"]

    def test_csv_header_required(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,score\nabc,0.5\n")
        with pytest.raises(EvaluatorError, match="header"):
            CsvLookup.from_file(path)

    def test_make_evaluator(self):
        assert isinstance(make_evaluator({"kind": "constant", "value": 0.2}), ConstantStub)
        assert isinstance(make_evaluator({"kind": "surrogate", "noise": 0.1}),
                          SyntheticSurrogate)
        with pytest.raises(EvaluatorError):
            make_evaluator({"kind": "nope"})


class TestScoring:
    def test_missing_scores_aggregate(self):
        pop = generate_population(1, FAST.space, FAST.regime, count=6,
                                  fixed_neck_head=(32, 96, 2))
        table = {s.id: 0.5 for s in pop[:3]}
        with pytest.raises(EvaluatorError) as err:
            score_population(pop, CsvLookup(table))
        assert sorted(err.value.missing_ids) == sorted(s.id for s in pop[3:])

    def test_select_best_rules(self):
        pop = generate_population(2, FAST.space, FAST.regime, count=6,
                                  fixed_neck_head=(32, 96, 2))
        for s in pop:
            s.ap = 0.5
        pop[3].ap = 0.9
        assert select_best(pop) is pop[3]
        # tie: lower total MACs wins, then lower id
        for s in pop:
            s.ap = 0.5
        by_macs = sorted(pop, key=lambda s: (s.flops.total_macs, s.id))
        assert select_best(pop) is by_macs[0]

    def test_select_best_requires_scores(self):
        pop = generate_population(3, FAST.space, FAST.regime, count=2,
                                  fixed_neck_head=(32, 96, 2))
        with pytest.raises(ValueError):
            select_best(pop)


class TestSteps:
    def test_step1_components_and_size(self, step1_record):
        assert step1_record.step == "step1"
        assert len(step1_record.population) == FAST.count
        assert [r.component for r in step1_record.ranges] == \
            ["stem", "c2", "c3", "c4", "c5", "shallow", "deep"]
        assert all(s.arch.neck.channels == 32 for s in step1_record.population)

    def test_step1_shallow_range_contains_surrogate_peak(self):
        ev = SyntheticSurrogate(peak_shallow=0.8, width_shallow=0.1, width_backbone=10.0)
        record = run_step1(SearchConfig(seed=5, count=160), ev)
        shallow = record.ranges_by_component()["shallow"]
        assert shallow.low <= 0.8 <= shallow.high

    def test_constant_scores_flag_degenerate(self):
        record = run_step1(FAST, ConstantStub())
        assert all(r.degenerate for r in record.ranges)

    def test_step2_membership_and_components(self, step1_record):
        record = run_step2(FAST, step1_record, SyntheticSurrogate())
        assert [r.component for r in record.ranges] == ["backbone", "neck", "head"]
        br = step1_record.backbone_ranges()
        for s in record.population:
            r = component_ratios(s.flops)
            for c, (lo, hi) in br.items():
                assert lo <= r[c] <= hi

    def test_step2_rewarding_backbone_ratio_localizes_it(self, step1_record):
        ev = SyntheticSurrogate(peak_backbone=0.75, width_backbone=0.05,
                                width_shallow=10.0)
        record = run_step2(SearchConfig(seed=6, count=160, replicates=500),
                           step1_record, ev)
        backbone = record.ranges_by_component()["backbone"]
        assert backbone.low <= 0.75 <= backbone.high

    def test_step2_requires_step1_record(self, step1_record):
        baseline = run_unconstrained(FAST, ConstantStub())
        with pytest.raises(ValueError, match="step1"):
            run_step2(FAST, baseline, ConstantStub())


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path, step1_record):
        out = tmp_path / "run"
        save_run(step1_record, out)
        again = load_run(out)
        assert again.step == "step1"
        assert [s.id for s in again.population] == [s.id for s in step1_record.population]
        assert again.ranges == step1_record.ranges
        assert again.best.id == step1_record.best.id
        assert again.config == step1_record.config

    def test_artifacts_byte_identical_across_reruns(self, tmp_path):
        ev = SyntheticSurrogate()
        blobs = []
        for name in ("a", "b"):
            record = run_step1(FAST, ev, tmp_path / name)
            blobs.append({p.name: p.read_bytes()
                          for p in sorted((tmp_path / name).iterdir())
                          if p.suffix in (".json", ".jsonl")})
        assert blobs[0] == blobs[1]

    def test_run_log_keeps_timestamps_out_of_json(self, tmp_path, step1_record):
        out = tmp_path / "run"
        save_run(step1_record, out)
        log = (out / "run.log").read_text()
        assert "step1" in log and "+00:00" in log
        for name in ("config.json", "ranges.json", "best.json"):
            assert "timestamp" not in (out / name).read_text()

    def test_load_missing_dir_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_run(tmp_path / "absent")

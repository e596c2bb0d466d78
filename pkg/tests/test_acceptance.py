"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Dataset-backed checks key off DETSPACE_DATASET_ROOT (a directory holding
wider_face_split/ and WIDER_train/ / WIDER_val/ image trees) and skip with
an explicit marker when it is absent.

Known red: the published parameter count of the mobile baseline
(0.37 M) is consistent with a regular-conv head, while its published MAC
count (0.507 G) is consistent with the depthwise head the same table
declares; no single head realizes both, so the depthwise reading is
implemented and the params assertion for that one row fails honestly.
"""

import json
import os
from pathlib import Path

import numpy as np
import pytest

from detspace.arch import BASELINE_ARCHS
from detspace.bootstrap import ScoredPair, empirical_bootstrap
from detspace.cli import main
from detspace.crops import BASELINE_CROP, SR_CROP, epoch_positive_stats, face_scale_cdf
from detspace.evaluators import SyntheticSurrogate
from detspace.flops import component_ratios, detector_flops
from detspace.pipeline import SearchConfig, run_step1, run_step2, run_unconstrained
from detspace.widerface import parse_widerface_gt, resolve_dimensions

from test_anchors import random_instance
from test_crops import synthetic_dataset
import oracle_atss

DATASET_ROOT = os.environ.get("DETSPACE_DATASET_ROOT")
needs_dataset = pytest.mark.skipif(
    DATASET_ROOT is None,
    reason="SKIPPED (dataset-gated): set DETSPACE_DATASET_ROOT to a WIDER FACE root",
)


def note(criterion: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")


def load_split(split: str):
    root = Path(DATASET_ROOT)
    gt = root / "wider_face_split" / f"wider_face_{split}_bbx_gt.txt"
    images = root / f"WIDER_{split}" / "images"
    dataset = parse_widerface_gt(gt.read_text(), split_label=split)
    cache = root / f"sizes_{split}.csv"
    return resolve_dimensions(dataset, image_root=images,
                              sizes_csv=cache if cache.exists() else None,
                              cache_csv=cache)


# --- criterion 1: flops/params reproduction of the published baselines ------

PUBLISHED = {
    "resnet_2.5gf": (2.57, 0.05, 1.62, 0.10),
    "resnet_10gf": (10.18, 0.05, 6.85, 0.10),
    "resnet_34gf": (34.16, 0.05, 24.81, 0.10),
    "mobilenet_0.5gf": (0.507, 0.10, 0.37, 0.10),
}


@pytest.mark.parametrize("name", list(PUBLISHED))
def test_criterion1_flops_reproduction(name):
    gmacs, tol, _, _ = PUBLISHED[name]
    got = detector_flops(BASELINE_ARCHS[name]).total_macs / 1e9
    ok = abs(got - gmacs) <= tol * gmacs
    note("criterion 1 (flops)", ok, f"{name}: {got:.4f} G vs {gmacs} G +/-{tol:.0%}")
    assert ok


@pytest.mark.parametrize("name", list(PUBLISHED))
def test_criterion1_params_reproduction(name):
    _, _, mparams, tol = PUBLISHED[name]
    got = detector_flops(BASELINE_ARCHS[name]).total_params / 1e6
    ok = abs(got - mparams) <= tol * mparams
    note("criterion 1 (params)", ok, f"{name}: {got:.4f} M vs {mparams} M +/-{tol:.0%}")
    assert ok  # mobilenet_0.5gf is a documented red; see the module docstring


# --- criterion 2: face-scale distribution on the validation split -----------

@needs_dataset
def test_criterion2_scale_statistics():
    dataset = load_split("val")
    _, fr = face_scale_cdf(dataset, long_edge=640, thresholds=(32, 16, 8))
    want = (0.7893, 0.5185, 0.1336)
    ok = all(abs(g - w) <= 0.01 for g, w in zip(fr, want))
    note("criterion 2", ok,
         "val CDF @32/16/8 = " + "/".join(f"{v:.4f}" for v in fr) + f" vs {want} +/-0.01")
    assert ok


# --- criterion 3: sample redistribution positives ----------------------------

@needs_dataset
def test_criterion3_sample_redistribution_real():
    dataset = load_split("train")
    base = epoch_positive_stats(dataset, BASELINE_CROP, seed=0)
    sr = epoch_positive_stats(dataset, SR_CROP, seed=0)
    checks = [
        ("baseline@16", base.positives[16], 72_300),
        ("sr@16", sr.positives[16], 118_300),
        ("baseline@32", base.positives[32], 95_900),
        ("sr@32", sr.positives[32], 115_100),
    ]
    ok = all(abs(got - want) <= 0.15 * want for _, got, want in checks)
    ratio = sr.positives[16] / base.positives[16]
    ok = ok and ratio >= 1.3
    note("criterion 3", ok,
         ", ".join(f"{n}={got} (want ~{want})" for n, got, want in checks)
         + f", sr/base@16={ratio:.2f}")
    assert ok


def test_criterion3_sample_redistribution_synthetic_fallback():
    ds = synthetic_dataset(np.random.default_rng(8), images=80, faces_per_image=8)
    base = epoch_positive_stats(ds, BASELINE_CROP, seed=3)
    sr = epoch_positive_stats(ds, SR_CROP, seed=3)
    ratio = sr.positives[16] / base.positives[16]
    ok = ratio >= 1.3
    note("criterion 3 (synthetic fallback)", ok,
         f"scale-16 positives {base.positives[16]} -> {sr.positives[16]} "
         f"(ratio {ratio:.2f}, need >= 1.3)")
    assert ok


# --- criterion 4: assignment equals the brute-force oracle ------------------

def test_criterion4_atss_oracle_equivalence():
    from detspace.anchors import atss_assign
    rng = np.random.default_rng(20240817)
    matches = 0
    trials = 1000
    for _ in range(trials):
        boxes, strides, gts = random_instance(rng)
        got = {j: list(map(int, v))
               for j, v in atss_assign(boxes, strides, gts).items()}
        want = oracle_atss.assign([list(b) for b in boxes], list(strides),
                                  [list(g) for g in gts])
        matches += got == want
    ok = matches == trials
    note("criterion 4", ok, f"{matches}/{trials} randomized instances identical")
    assert ok


# --- criterion 5: bootstrap recovery of a known optimum ---------------------

def _recovery_hits(noise: float) -> int:
    hits = 0
    for trial in range(100):
        rng = np.random.default_rng(trial)
        xs = rng.uniform(0.0, 1.0, 320)
        aps = 1.0 - (xs - 0.3) ** 2
        if noise:
            aps = aps + noise * rng.standard_normal(320)
        pairs = [ScoredPair(float(x), float(a), f"s{i:04d}")
                 for i, (x, a) in enumerate(zip(xs, aps))]
        r = empirical_bootstrap(pairs, seed=trial)
        hits += r.low <= 0.3 <= r.high
    return hits


def test_criterion5_bootstrap_recovery():
    noiseless = _recovery_hits(0.0)
    noisy = _recovery_hits(0.02)
    ok = noiseless >= 95 and noisy >= 90
    note("criterion 5", ok,
         f"noiseless coverage {noiseless}/100 (>=95), sigma=0.02 coverage {noisy}/100 (>=90)")
    assert ok


# --- criterion 6: two-step pipeline property ---------------------------------

# Trial configuration: a sharp shallow peak the constraint can focus on, a
# flat backbone term, and step-1 ranges estimated with larger replicate
# subsamples at 99% confidence (concentration plus argmax coverage).
TRIAL_SURROGATE = dict(peak_shallow=0.85, width_shallow=0.06, width_backbone=1.0)
TRIAL_CONFIDENCE = 0.99
TRIAL_SUBSAMPLE = 0.5


def test_criterion6_full_two_step_run_completes_with_membership():
    ev = SyntheticSurrogate(**TRIAL_SURROGATE)
    config = SearchConfig(seed=0, count=320, confidence=TRIAL_CONFIDENCE,
                          subsample_frac=TRIAL_SUBSAMPLE)
    s1 = run_step1(config, ev)
    s2 = run_step2(config, s1, ev)
    assert len(s1.population) == 320 and len(s2.population) == 320
    ranges = s1.backbone_ranges()
    inside = sum(
        all(lo <= component_ratios(s.flops)[c] <= hi for c, (lo, hi) in ranges.items())
        for s in s2.population)
    ok = inside == len(s2.population)
    note("criterion 6 (membership)", ok,
         f"step-2 samples inside step-1 ranges: {inside}/{len(s2.population)}")
    assert ok


def test_criterion6_two_step_beats_unconstrained_in_45_of_50_seeds():
    ev = SyntheticSurrogate(**TRIAL_SURROGATE)
    wins = 0
    for seed in range(50):
        config = SearchConfig(seed=seed, count=320, confidence=TRIAL_CONFIDENCE,
                              subsample_frac=TRIAL_SUBSAMPLE)
        s1 = run_step1(config, ev)
        s2 = run_step2(config, s1, ev)
        base = run_unconstrained(config, ev)
        wins += s2.best.ap >= base.best.ap
    ok = wins >= 45
    note("criterion 6 (search focusing)", ok, f"step-2 won {wins}/50 seeds (need >= 45)")
    assert ok


# --- criterion 7: byte-identical reruns of every command --------------------

def _run_all_commands(base: Path, tag: str) -> dict[str, bytes]:
    out = base / tag
    out.mkdir()
    arch = out / "arch.json"
    arch.write_text(BASELINE_ARCHS["resnet_2.5gf"].to_json())
    ds = synthetic_dataset(np.random.default_rng(1), images=12)
    from detspace.widerface import format_widerface_gt, write_sizes_csv
    gt = out / "gt.txt"
    gt.write_text(format_widerface_gt(ds))
    sizes = out / "sizes.csv"
    write_sizes_csv(ds, sizes)
    config = out / "config.json"
    config.write_text(json.dumps({
        "seed": 5, "count": 24,
        "regime": {"target_gflops": 2.5, "band": 0.05},
        "bootstrap": {"replicates": 200},
        "evaluator": {"kind": "surrogate"},
    }))

    assert main(["flops", str(arch), "--csv", str(out / "flops.csv"),
                 "--svg", str(out / "flops.svg")]) == 0
    assert main(["scale-stats", "--gt", str(gt), "--sizes-csv", str(sizes),
                 "--csv", str(out / "cdf.csv"), "--svg", str(out / "cdf.svg")]) == 0
    assert main(["anchor-stats", "--gt", str(gt), "--sizes-csv", str(sizes),
                 "--policy", "sr", "--seed", "4",
                 "--csv", str(out / "stats.csv"), "--json", str(out / "stats.json"),
                 "--svg", str(out / "stats.svg")]) == 0
    assert main(["search", "step1", "--config", str(config),
                 "--out", str(out / "run1")]) == 0
    assert main(["search", "step2", "--config", str(config),
                 "--step1-dir", str(out / "run1"), "--out", str(out / "run2")]) == 0
    assert main(["bootstrap", str(out / "run1" / "population.jsonl"), "--seed", "5",
                 "--replicates", "200", "--csv", str(out / "ranges.csv"),
                 "--json", str(out / "ranges.json")]) == 0
    assert main(["report", str(out / "run1"), "--reference"]) == 0

    blobs = {}
    for path in sorted(out.rglob("*")):
        if path.is_file() and path.suffix in (".csv", ".json", ".jsonl", ".svg", ".md"):
            if path.name == "run.log":
                continue
            blobs[str(path.relative_to(out))] = path.read_bytes()
    return blobs


def test_criterion7_determinism_suite(tmp_path):
    first = _run_all_commands(tmp_path, "a")
    second = _run_all_commands(tmp_path, "b")
    same = {k for k in first if first[k] == second.get(k)}
    ok = first.keys() == second.keys() and len(same) == len(first)
    diffs = sorted(set(first) ^ set(second)) + sorted(k for k in first
                                                      if first[k] != second.get(k))
    note("criterion 7", ok,
         f"{len(same)}/{len(first)} artifacts byte-identical across reruns"
         + (f", diffs: {diffs[:4]}" if diffs else ""))
    assert ok


# --- criterion 8: desk-scale limits stated and reference fixtures shipped ---

def test_criterion8_reference_fixtures_consumed_not_asserted(tmp_path):
    from detspace.report import load_reference_ranges, render_run_report
    ref = load_reference_ranges()
    # fixtures carry the published ranges for both steps
    assert set(ref["step1"]) == {"stem", "c2", "c3", "c4", "c5", "shallow", "deep"}
    assert set(ref["step2"]) == {"backbone", "neck", "head"}
    # the renderer consumes them as overlays on a synthetic run
    ev = SyntheticSurrogate()
    config = SearchConfig(seed=2, count=24, replicates=200)
    run_step1(config, ev, tmp_path / "run")
    written = render_run_report(tmp_path / "run", ref)
    shallow_svg = next(p for p in written if p.name == "scatter_shallow.svg")
    ok = "stroke-dasharray" in shallow_svg.read_text()
    note("criterion 8", ok,
         "published AP-derived ranges ship as report overlays only; reproducing "
         "them requires GPU training of 320 detectors per step and is out of scope")
    assert ok

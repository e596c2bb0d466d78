"""The two-step computation-redistribution search on a synthetic evaluator.

Step 1 locates the backbone split that scores best; step 2 re-searches the
whole detector with the backbone constrained to those ranges. The surrogate
stands in for training each candidate, so the run takes seconds.
"""

from pathlib import Path

from detspace import SearchConfig, SyntheticSurrogate, run_step1, run_step2, run_unconstrained
from detspace.report import render_run_report

OUT = Path(__file__).parent / "output" / "two_step"

evaluator = SyntheticSurrogate()  # rewards shallow-heavy backbones
config = SearchConfig(seed=0, count=96, replicates=500)

step1 = run_step1(config, evaluator, OUT / "step1")
print("step 1 (backbone only, neck/head pinned at n=32, h=96, m=2):")
for r in step1.ranges:
    print(f"  {r.component:8s} best-model range ({r.low:.2f}, {r.high:.2f})")

step2 = run_step2(config, step1, evaluator, OUT / "step2")
print("\nstep 2 (whole detector, backbone follows step 1):")
for r in step2.ranges:
    print(f"  {r.component:8s} best-model range ({r.low:.2f}, {r.high:.2f})")

baseline = run_unconstrained(config, evaluator)
print(f"\nbest score: step2 {step2.best.ap:.4f} vs unconstrained {baseline.best.ap:.4f}")
best = step2.best
print(f"best architecture {best.id}: stages "
      f"{list(zip(best.arch.backbone.depths, best.arch.backbone.widths))}, "
      f"n={best.arch.neck.channels}, h={best.arch.head.channels}, m={best.arch.head.depth}")

written = render_run_report(OUT / "step1")
print(f"\nrendered {len(written)} report files under {OUT / 'step1' / 'report'}")

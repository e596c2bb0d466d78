"""Flop-budgeted random sampling of detector architectures.

Draws a 64-model population inside the 2.5 G +/- 5% regime with the neck
and head pinned, then summarizes how the budget spreads over stages.
"""

import numpy as np

from detspace import FlopRegime, SearchSpaceSpec, component_ratios, generate_population

spec = SearchSpaceSpec()
regime = FlopRegime(target_gmacs=2.5, band=0.05)

population = generate_population(seed=42, spec=spec, regime=regime, count=64,
                                 fixed_neck_head=(32, 96, 2))

totals = np.array([s.flops.total_macs / 1e9 for s in population])
print(f"accepted {len(population)} architectures, "
      f"totals in [{totals.min():.3f}, {totals.max():.3f}] G")

ratios = [component_ratios(s.flops) for s in population]
print("\nwithin-backbone computation ratios (population spread):")
for comp in ("stem", "c2", "c3", "c4", "c5", "shallow", "deep"):
    xs = np.array([r[comp] for r in ratios])
    print(f"  {comp:8s} median {np.median(xs):.3f}  iqr [{np.percentile(xs, 25):.3f}, "
          f"{np.percentile(xs, 75):.3f}]")

smallest = min(population, key=lambda s: s.flops.total_params)
print(f"\nleanest sample {smallest.id}: stages "
      f"{list(zip(smallest.arch.backbone.depths, smallest.arch.backbone.widths))}, "
      f"{smallest.flops.total_params / 1e6:.3f} Mparams")

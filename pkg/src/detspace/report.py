"""Report and plot emission for runs and statistics."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .flops import FlopsBreakdown, component_ratios
from .pipeline import RunRecord, load_run
from .svgplot import grouped_bars, line_chart, scatter_with_band, stacked_bar

REFERENCE_RESOURCE = "reference_ranges_2p5g.json"


def load_reference_ranges(path=None) -> dict:
    """Bundled (or user-supplied) reference range overlays for reports."""
    if path is not None:
        return json.loads(Path(path).read_text())
    with resources.files("detspace.data").joinpath(REFERENCE_RESOURCE).open() as f:
        return json.load(f)


def flops_table(breakdown: FlopsBreakdown) -> str:
    rows = ["component,macs,params,ratio"]
    ratios = breakdown.ratios
    for comp in breakdown.macs:
        rows.append(f"{comp},{breakdown.macs[comp]},{breakdown.params[comp]},"
                    f"{ratios[comp]:.6f}")
    rows.append(f"total,{breakdown.total_macs},{breakdown.total_params},1.000000")
    return "\n".join(rows) + "\n"


def flops_svg(breakdown: FlopsBreakdown, title: str = "computation split") -> str:
    return stacked_bar([(c, float(m)) for c, m in breakdown.macs.items()], title)


def cdf_csv(thresholds, fractions) -> str:
    lines = ["threshold,fraction"]
    for t, f in zip(thresholds, fractions):
        lines.append(f"{t:g},{f!r}")
    return "\n".join(lines) + "\n"


def cdf_svg(thresholds, fractions, marks=None) -> str:
    return line_chart(list(map(float, thresholds)), list(map(float, fractions)),
                      "cumulative face scale distribution", "face scale (px)",
                      "fraction below", marks)


def frontier(record: RunRecord, top: int = 10) -> list[dict]:
    """Best-scoring in-regime samples, the manual-selection shortlist."""
    scored = sorted(record.population,
                    key=lambda s: (-(s.ap or 0.0), s.flops.total_macs, s.id))
    out = []
    for s in scored[:top]:
        out.append({"id": s.id, "ap": s.ap, "gmacs": s.flops.total_macs / 1e9,
                    "mparams": s.flops.total_params / 1e6})
    return out


def render_run_report(run_dir, reference: dict | None = None) -> list[Path]:
    """Markdown summary plus one ratio-vs-score scatter per analysed component."""
    record = load_run(run_dir)
    out_dir = Path(run_dir) / "report"
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    ratios = [component_ratios(s.flops) for s in record.population]
    ref_step = None
    if reference is not None:
        ref_step = reference.get("step1" if record.step == "step1" else "step2", {})

    for rng in record.ranges:
        comp = rng.component
        points = [(r[comp], s.ap) for r, s in zip(ratios, record.population)]
        ref_band = tuple(ref_step[comp]) if ref_step and comp in ref_step else None
        svg = scatter_with_band(points, (rng.low, rng.high),
                                f"{comp} ratio vs score ({record.step})",
                                f"{comp} computation ratio",
                                reference_band=ref_band)
        path = out_dir / f"scatter_{comp}.svg"
        path.write_text(svg, encoding="ascii")
        written.append(path)

    lines = [f"# {record.step} run report", ""]
    lines.append(f"- population: {len(record.population)} samples")
    lines.append(f"- regime: {record.config.regime.target_gmacs} Gmacs "
                 f"+/- {record.config.regime.band * 100:.0f}%")
    lines.append(f"- seed: {record.config.seed}")
    lines.append(f"- bootstrap: B={record.config.replicates}, "
                 f"subsample={record.config.subsample_frac}, "
                 f"confidence={record.config.confidence}")
    lines.append("")
    lines.append("## Estimated best-model ranges")
    lines.append("")
    lines.append("| component | low | high | degenerate |")
    lines.append("|---|---|---|---|")
    for rng in record.ranges:
        lines.append(f"| {rng.component} | {rng.low:.4f} | {rng.high:.4f} "
                     f"| {'yes' if rng.degenerate else ''} |")
    if ref_step:
        lines.append("")
        lines.append("Reference overlays (externally measured; not reproducible without "
                     "training each sampled detector) are drawn as dashed boxes.")
    lines.append("")
    lines.append("## Best sample")
    lines.append("")
    lines.append("```json")
    lines.append(record.best.to_json_line())
    lines.append("```")
    lines.append("")
    lines.append("## Frontier (top scored, manual-selection shortlist)")
    lines.append("")
    lines.append("| id | ap | Gmacs | Mparams |")
    lines.append("|---|---|---|---|")
    for row in frontier(record):
        lines.append(f"| {row['id']} | {row['ap']:.5f} | {row['gmacs']:.4f} "
                     f"| {row['mparams']:.4f} |")
    md = out_dir / "report.md"
    md.write_text("\n".join(lines) + "\n", encoding="ascii")
    written.append(md)
    return written


def match_stats_svg(stats_by_policy: dict[str, dict[int, int]]) -> str:
    scales = sorted({s for d in stats_by_policy.values() for s in d})
    series = {name: [float(d.get(s, 0)) for s in scales]
              for name, d in stats_by_policy.items()}
    return grouped_bars([str(s) for s in scales], series,
                        "positive anchors per scale", "anchor scale", "positives")

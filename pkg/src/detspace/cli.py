"""Command-line entry points.

Exit codes: 0 success, 1 usage/config error, 2 data error. All randomness
flows from the seed in the config/flags, and artifacts are byte-identical
across reruns of the same command.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import report as report_mod
from .arch import ArchError, DetectorArch
from .bootstrap import range_report, ranges_to_csv, ranges_to_dict
from .config import ConfigError, load_config, search_config_from_dict
from .crops import crop_policy, epoch_positive_stats, face_scale_cdf
from .evaluators import EvaluatorError, make_evaluator
from .flops import detector_flops, enumerate_layers, layer_listing_csv
from .pipeline import load_run, run_step1, run_step2
from .sampling import RegimeInfeasibleError, read_population
from .widerface import (
    DimensionResolutionError,
    GtParseError,
    parse_widerface_gt,
    resolve_dimensions,
)

DATASET_ROOT_ENV = "DETSPACE_DATASET_ROOT"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; usage errors are 1 here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class DataError(RuntimeError):
    pass


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise DataError(f"bad input size {text!r}, expected WxH") from None


def _load_dataset(args) -> "FaceDataset":
    gt_path = Path(args.gt)
    try:
        dataset = parse_widerface_gt(gt_path.read_text(encoding="utf-8"),
                                     split_label=gt_path.stem)
    except OSError as exc:
        raise DataError(f"cannot read {gt_path}: {exc}") from exc
    except GtParseError as exc:
        raise DataError(f"{gt_path}: {exc}") from exc
    image_root = args.image_root or os.environ.get(DATASET_ROOT_ENV)
    try:
        return resolve_dimensions(dataset, image_root=image_root,
                                  sizes_csv=args.sizes_csv,
                                  cache_csv=getattr(args, "cache_csv", None))
    except DimensionResolutionError as exc:
        raise DataError(str(exc)) from exc


def _write(path: Path | None, text: str, label: str) -> None:
    if path is None:
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="ascii")
    print(f"wrote {label}: {path}")


def cmd_flops(args) -> int:
    try:
        arch = DetectorArch.from_json(Path(args.arch).read_text(encoding="utf-8"))
        input_size = _parse_size(args.input_size)
        breakdown = detector_flops(arch, input_size)
    except (OSError, ArchError) as exc:
        raise DataError(str(exc)) from exc
    table = report_mod.flops_table(breakdown)
    print(table, end="")
    print(f"total: {breakdown.total_macs / 1e9:.4f} Gmacs, "
          f"{breakdown.total_params / 1e6:.4f} Mparams")
    _write(args.csv and Path(args.csv), table, "component table")
    if args.layers:
        _write(Path(args.layers), layer_listing_csv(enumerate_layers(arch, input_size)),
               "layer listing")
    if args.svg:
        _write(Path(args.svg), report_mod.flops_svg(breakdown), "stacked bar")
    return EXIT_OK


def cmd_scale_stats(args) -> int:
    dataset = _load_dataset(args)
    thresholds = None
    if args.thresholds:
        thresholds = [float(t) for t in args.thresholds.split(",") if t]
    try:
        ts, fractions = face_scale_cdf(dataset, long_edge=args.long_edge,
                                       thresholds=thresholds,
                                       include_invalid=args.include_invalid)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    for t, f in zip(ts, fractions):
        print(f"P(scale < {t:g}) = {f:.4f}")
    _write(args.csv and Path(args.csv), report_mod.cdf_csv(ts, fractions), "CDF")
    if args.svg:
        full_t, full_f = face_scale_cdf(dataset, long_edge=args.long_edge,
                                        include_invalid=args.include_invalid)
        marks = [(float(t), float(f), f"{f * 100:.2f}%") for t, f in zip(ts, fractions)]
        _write(Path(args.svg), report_mod.cdf_svg(full_t, full_f, marks), "CDF plot")
    return EXIT_OK


def cmd_anchor_stats(args) -> int:
    dataset = _load_dataset(args)
    policy = crop_policy(args.policy)
    stats = epoch_positive_stats(dataset, policy, seed=args.seed, epochs=args.epochs,
                                 include_invalid=args.include_invalid,
                                 dedup=not args.raw_counts)
    obj = stats.to_dict()
    obj["policy"] = args.policy
    obj["seed"] = args.seed
    print(json.dumps(obj, indent=2, sort_keys=True))
    _write(args.csv and Path(args.csv), stats.to_csv(), "match stats")
    if args.json:
        _write(Path(args.json), json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n",
               "match stats json")
    if args.svg:
        _write(Path(args.svg),
               report_mod.match_stats_svg({args.policy: stats.positives}), "positives plot")
    return EXIT_OK


def cmd_search(args) -> int:
    cfg_obj = load_config(args.config)
    config = search_config_from_dict(cfg_obj)
    out_dir = Path(args.out or cfg_obj.get("output_dir") or f"runs/{args.step}")
    if args.scores:
        evaluator = make_evaluator({"kind": "csv", "path": args.scores})
    else:
        ev_cfg = cfg_obj.get("evaluator")
        if ev_cfg is None:
            raise ConfigError("no evaluator: pass --scores or set 'evaluator' in the config")
        evaluator = make_evaluator(ev_cfg)
    try:
        if args.step == "step1":
            record = run_step1(config, evaluator, out_dir)
        else:
            if not args.step1_dir:
                raise ConfigError("search step2 needs --step1-dir")
            step1 = load_run(args.step1_dir)
            record = run_step2(config, step1, evaluator, out_dir)
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    except (RegimeInfeasibleError, EvaluatorError) as exc:
        raise DataError(str(exc)) from exc
    print(f"{args.step}: {len(record.population)} samples in regime "
          f"{config.regime.target_gmacs} Gmacs -> {out_dir}")
    print(f"best {record.best.id} ap={record.best.ap:.5f} "
          f"({record.best.flops.total_macs / 1e9:.4f} Gmacs)")
    for r in record.ranges:
        print(f"  {r.component}: ({r.low:.3f}, {r.high:.3f})"
              + (" [degenerate]" if r.degenerate else ""))
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    try:
        population = read_population(args.population)
    except OSError as exc:
        raise DataError(f"cannot read population: {exc}") from exc
    components = args.components.split(",") if args.components else None
    try:
        ranges = range_report(population, args.seed, components,
                              replicates=args.replicates,
                              subsample_frac=args.subsample_frac,
                              confidence=args.confidence)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    print(ranges_to_csv(ranges), end="")
    _write(args.csv and Path(args.csv), ranges_to_csv(ranges), "ranges CSV")
    if args.json:
        _write(Path(args.json),
               json.dumps(ranges_to_dict(ranges), sort_keys=True, separators=(",", ":")) + "\n",
               "ranges JSON")
    return EXIT_OK


def cmd_report(args) -> int:
    reference = None
    if args.reference == "bundled":
        reference = report_mod.load_reference_ranges()
    elif args.reference:
        reference = report_mod.load_reference_ranges(args.reference)
    try:
        written = report_mod.render_run_report(args.run_dir, reference)
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="detspace",
                     description="design-space analysis for efficient face detectors")
    parser.add_argument("--threads", type=int, default=os.cpu_count(),
                        help="worker cap (runs are deterministic regardless)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flops", help="per-component MAC/param breakdown of an arch JSON")
    p.add_argument("arch", help="architecture JSON file")
    p.add_argument("--input-size", default="640x480")
    p.add_argument("--csv", help="write the component table CSV here")
    p.add_argument("--layers", help="write the debug layer listing CSV here")
    p.add_argument("--svg", help="write a stacked-bar SVG here")
    p.set_defaults(func=cmd_flops)

    def dataset_flags(p):
        p.add_argument("--gt", required=True, help="bbx_gt annotation file")
        p.add_argument("--image-root", help=f"image tree root (or ${DATASET_ROOT_ENV})")
        p.add_argument("--sizes-csv", help="path,width,height sidecar (wins over probing)")
        p.add_argument("--cache-csv", help="write resolved sizes here for reuse")
        p.add_argument("--include-invalid", action="store_true",
                       help="keep invalid/degenerate faces in the statistics")

    p = sub.add_parser("scale-stats", help="cumulative face-scale distribution")
    dataset_flags(p)
    p.add_argument("--long-edge", type=int, default=640)
    p.add_argument("--thresholds", default="32,16,8",
                   help="comma list; empty string emits the full curve")
    p.add_argument("--csv")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_scale_stats)

    p = sub.add_parser("anchor-stats", help="simulated positive-anchor statistics")
    dataset_flags(p)
    p.add_argument("--policy", choices=("baseline", "sr"), default="baseline")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--raw-counts", action="store_true",
                   help="count per-gt candidates before cross-gt deduplication")
    p.add_argument("--csv")
    p.add_argument("--json")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_anchor_stats)

    p = sub.add_parser("search", help="two-step computation redistribution search")
    p.add_argument("step", choices=("step1", "step2"))
    p.add_argument("--config", required=True, help="run config JSON")
    p.add_argument("--scores", help="arch_id,ap CSV (overrides config evaluator)")
    p.add_argument("--step1-dir", help="step-1 run directory (step2 only)")
    p.add_argument("--out", help="run directory (default from config)")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("bootstrap", help="bootstrap ranges of a scored population")
    p.add_argument("population", help="population JSONL")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--components", help="comma list (default: all)")
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--subsample-frac", type=float, default=0.25)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--csv")
    p.add_argument("--json")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("report", help="render markdown + SVG report for a run directory")
    p.add_argument("run_dir")
    p.add_argument("--reference", nargs="?", const="bundled",
                   help="overlay reference ranges ('bundled' or a JSON path)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, GtParseError, DimensionResolutionError, ArchError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

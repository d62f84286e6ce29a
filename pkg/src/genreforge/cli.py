"""Command-line entry point (``genreforge`` / ``python -m genreforge``).

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from genreforge.audio_io import load_manifest, synthesize_corpus
from genreforge.errors import DataError, NumericalError
from genreforge.evaluation import (
    DEFAULT_FEATURES,
    ExperimentConfig,
    emit_plot_data,
    emit_report,
    prepare_features,
    run_experiment,
    stratified_split,
    sweep_k,
)
from genreforge.features import FeatureConfig, extract_manifest, read_feature_csv, write_feature_csv

log = logging.getLogger("genreforge")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _names(text: str) -> tuple:
    return tuple(n.strip() for n in text.split(",") if n.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="genreforge", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", help="extract the 138 features for every manifest entry")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=float, default=0.050, help="frame length in seconds")
    p.add_argument("--step", type=float, default=0.025, help="frame hop in seconds")
    p.add_argument("--mt-window", type=float, default=1.0, help="mid-term window in seconds")
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("synth-corpus", help="write the synthetic two-genre corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--duration", type=float, default=10.0)

    for name in ("run", "sweep-k"):
        p = sub.add_parser(name)
        p.add_argument("--features", required=True)
        p.add_argument("--mode", choices=["part1", "part2", "part1_lda", "part2_select"], required=True)
        p.add_argument("--select", type=_names, default=DEFAULT_FEATURES,
                       help="comma-separated feature names (part2)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--split", type=float, default=0.75)
        p.add_argument("--threads", type=int, default=None)
        if name == "run":
            p.add_argument("--knn-k", type=int, default=None)
            p.add_argument("--k-min", type=int, default=1)
            p.add_argument("--k-max", type=int, default=15)
            p.add_argument("--holdout-only", action="store_true",
                           help="also report accuracy on the held-out rows only")
            p.add_argument("--report-dir", required=True)
        else:
            p.add_argument("--k-min", type=int, default=1)
            p.add_argument("--k-max", type=int, default=15)
            p.add_argument("--out", required=True)
    return parser


def _config(args) -> ExperimentConfig:
    return ExperimentConfig(
        mode=args.mode,
        selected_features=args.select,
        split_ratio=args.split,
        seed=args.seed,
        k_range=(args.k_min, args.k_max),
        knn_k=getattr(args, "knn_k", None),
        holdout_only=getattr(args, "holdout_only", False),
    )


def cmd_extract(args) -> None:
    if not 0 < args.step <= args.window:
        raise UsageError("--step must be positive and no larger than --window")
    manifest = load_manifest(args.manifest)
    config = FeatureConfig(window_s=args.window, step_s=args.step,
                           mt_window_s=args.mt_window, mt_step_s=args.mt_window)
    ds = extract_manifest(manifest, config, threads=args.threads)
    write_feature_csv(ds, args.out)
    log.info("wrote %d x %d features to %s", ds.n_samples, ds.n_features, args.out)


def cmd_synth(args) -> None:
    manifest = synthesize_corpus(args.out, seed=args.seed, duration=args.duration)
    log.info("wrote %d clips and manifest.csv to %s", len(manifest.entries), args.out)


def cmd_run(args) -> None:
    cfg = _config(args)
    features = read_feature_csv(args.features)
    report, models = run_experiment(cfg, features, threads=args.threads, return_models=True)
    report.config["features_path"] = args.features
    out = Path(args.report_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_report(report, "json", out / "report.json")
    emit_report(report, "text", out / "report.txt")
    emit_report(report, "csv", out / "report.csv")
    for which in report.series:
        emit_plot_data(report, which, out)
    (out / "models.json").write_text(
        json.dumps({name: m.to_dict() for name, m in models.items()}) + "\n", encoding="utf-8")
    sys.stdout.write(report.to_text())


def cmd_sweep(args) -> None:
    cfg = _config(args)
    features = read_feature_csv(args.features)
    data, _ = prepare_features(cfg, features)
    train, _ = stratified_split(data, cfg.split_ratio, cfg.seed)
    rows = sweep_k(train, data, cfg.k_range)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("k,accuracy\n")
        fh.writelines(f"{k},{acc!r}\n" for k, acc in rows)
    for k, acc in rows:
        print(f"{k} {acc:.2f}")


COMMANDS = {"extract": cmd_extract, "synth-corpus": cmd_synth, "run": cmd_run, "sweep-k": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"genreforge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"genreforge: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError) as exc:
        print(f"genreforge: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())

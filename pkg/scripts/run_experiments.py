"""Run both experiment recipes and print each accuracy table next to the
published values.

Uses the synthetic corpus unless ``--manifest`` names the original clips.

    python scripts/run_experiments.py --work /tmp/gf
    python scripts/run_experiments.py --manifest data/manifest.csv --work /tmp/gf
"""
import argparse
from pathlib import Path

from genreforge.audio_io import load_manifest, synthesize_corpus
from genreforge.evaluation import ExperimentConfig, emit_plot_data, emit_report, run_experiment
from genreforge.features import extract_manifest, write_feature_csv

PUBLISHED = {
    "part1": {"LogisticRegression": 0.95, "SVC sigmoid": 0.95, "KNeighborsClassifier": 0.90,
              "RandomForestClassifier": 0.90, "DecisionTreeClassifier": 0.90, "GaussianNB": 0.90,
              "SVC linear": 0.90, "SVC rbf": 0.90, "SVC poly": 0.75},
    "part2": {"LogisticRegression": 0.95, "SVC sigmoid": 0.95, "KNeighborsClassifier": 0.95,
              "RandomForestClassifier": 0.95, "DecisionTreeClassifier": 0.90, "GaussianNB": 0.95,
              "SVC linear": 0.95, "SVC rbf": 0.95, "SVC poly": 0.90},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--manifest", help="manifest of real clips; default synthesizes a corpus")
    ap.add_argument("--work", default="runs/experiments", help="output directory")
    ap.add_argument("--seed", type=int, default=0, help="split seed")
    ap.add_argument("--corpus-seed", type=int, default=42)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    work = Path(args.work)
    work.mkdir(parents=True, exist_ok=True)
    if args.manifest:
        manifest = load_manifest(args.manifest)
    else:
        manifest = synthesize_corpus(work / "corpus", seed=args.corpus_seed)
    features = extract_manifest(manifest, threads=args.threads)
    write_feature_csv(features, work / "features.csv")
    print(f"features: {features.n_samples} x {features.n_features}")

    for mode in ("part1", "part2"):
        report = run_experiment(ExperimentConfig(mode, seed=args.seed), features, threads=args.threads)
        out = work / mode
        out.mkdir(exist_ok=True)
        emit_report(report, "json", out / "report.json")
        emit_report(report, "text", out / "report.txt")
        for which in report.series:
            emit_plot_data(report, which, out)
        print(f"\n{mode}  (knn k={report.config['knn_k']})")
        print(f"{'algorithm':<24}{'ours':>6}{'published':>11}")
        for name, acc in report.rows:
            print(f"{name:<24}{acc:>6.2f}{PUBLISHED[mode][name]:>11.2f}")
        for note in report.notes:
            print(f"note: {note}")


if __name__ == "__main__":
    main()

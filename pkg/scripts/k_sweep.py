"""Print the KNN accuracy-vs-k curve for both recipes from a feature CSV.

    python scripts/k_sweep.py runs/experiments/features.csv --k-max 15
"""
import argparse

from genreforge.evaluation import ExperimentConfig, prepare_features, stratified_split, sweep_k
from genreforge.features import read_feature_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("features")
    ap.add_argument("--k-min", type=int, default=1)
    ap.add_argument("--k-max", type=int, default=15)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--split", type=float, default=0.75)
    args = ap.parse_args()

    ds = read_feature_csv(args.features)
    curves = {}
    for mode in ("part1", "part2"):
        cfg = ExperimentConfig(mode, seed=args.seed, split_ratio=args.split)
        data, _ = prepare_features(cfg, ds)
        train, _ = stratified_split(data, cfg.split_ratio, cfg.seed)
        k_max = min(args.k_max, train.n_samples)
        curves[mode] = dict(sweep_k(train, data, (args.k_min, k_max)))

    print(f"{'k':>3}{'part1':>8}{'part2':>8}")
    for k in sorted(set(curves["part1"]) | set(curves["part2"])):
        row = [curves[m].get(k) for m in ("part1", "part2")]
        print(f"{k:>3}" + "".join(f"{v:>8.2f}" if v is not None else f"{'':>8}" for v in row))


if __name__ == "__main__":
    main()

"""Experiment harness: splits, metrics, k-sweeps, the two experiment recipes
and report / plot-data output.

Both recipes follow the same protocol: standardize on all rows, reduce the
features (LDA projection or named columns), train on a stratified split and
score every model on the complete dataset.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from genreforge.classifiers import (
    KernelSpec,
    train_forest,
    train_gnb,
    train_knn,
    train_logreg,
    train_svc,
    train_tree,
)
from genreforge.errors import (
    DataError,
    DegenerateClass,
    Empty,
    KOutOfRange,
    LengthMismatch,
    MissingSeries,
)
from genreforge.features import thread_count
from genreforge.preprocess import (
    Dataset,
    apply_standardizer,
    fit_lda,
    fit_standardizer,
    project,
    select_features,
)

ALGORITHMS = (
    "LogisticRegression",
    "SVC sigmoid",
    "KNeighborsClassifier",
    "RandomForestClassifier",
    "DecisionTreeClassifier",
    "GaussianNB",
    "SVC linear",
    "SVC rbf",
    "SVC poly",
)
DEFAULT_FEATURES = ("spectral_centroid_mean", "energy_entropy_mean")
MODES = ("part1", "part2")
MODE_ALIASES = {"part1_lda": "part1", "part2_select": "part2"}
DEFAULT_KNN_K = {"part1": 8, "part2": 7}


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "part1"
    selected_features: tuple = DEFAULT_FEATURES
    split_ratio: float = 0.75
    seed: int = 0
    k_range: tuple = (1, 15)
    knn_k: int | None = None
    holdout_only: bool = False
    forest_trees: int = 100

    def __post_init__(self):
        object.__setattr__(self, "mode", MODE_ALIASES.get(self.mode, self.mode))
        if self.mode not in MODES:
            raise DataError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.split_ratio < 1:
            raise DataError(f"split ratio must be in (0, 1), got {self.split_ratio}")
        k_min, k_max = self.k_range
        if not 1 <= k_min <= k_max:
            raise DataError(f"empty or invalid k range {self.k_range}")
        object.__setattr__(self, "selected_features", tuple(self.selected_features))
        object.__setattr__(self, "k_range", (int(k_min), int(k_max)))

    @property
    def effective_knn_k(self) -> int:
        return self.knn_k if self.knn_k is not None else DEFAULT_KNN_K[self.mode]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["selected_features"] = list(self.selected_features)
        d["k_range"] = list(self.k_range)
        d["knn_k"] = self.effective_knn_k
        return d


# --- splits and metrics -----------------------------------------------------

def stratified_split(ds: Dataset, ratio: float = 0.75, seed: int = 0):
    """Shuffle each class with a seeded generator and send
    ``ceil(ratio * n_class)`` rows of it to train.  Both halves keep the
    original row order."""
    rng = np.random.default_rng(seed)
    train_rows, test_rows = [], []
    for c in range(len(ds.class_names)):
        idx = np.flatnonzero(ds.y == c)
        if len(idx) == 0:
            continue
        if len(idx) < 2:
            raise DegenerateClass(f"class {ds.class_names[c]!r} has fewer than 2 rows")
        perm = rng.permutation(idx)
        # round first so 0.7 * 10 does not ceil to 8
        n_train = math.ceil(round(ratio * len(idx), 9))
        train_rows.extend(perm[:n_train])
        test_rows.extend(perm[n_train:])
    return ds.subset(np.sort(train_rows)), ds.subset(np.sort(np.array(test_rows, dtype=np.int64)))


def accuracy(y_true, y_pred) -> float:
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} labels vs {len(y_pred)} predictions")
    if len(y_true) == 0:
        raise Empty("accuracy of an empty set")
    return int(np.sum(y_true == y_pred)) / len(y_true)


def confusion_matrix(y_true, y_pred, n_classes: int = 2) -> np.ndarray:
    y_true, y_pred = np.asarray(y_true, dtype=np.int64), np.asarray(y_pred, dtype=np.int64)
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} labels vs {len(y_pred)} predictions")
    if len(y_true) and (max(y_true.max(), y_pred.max()) >= n_classes or min(y_true.min(), y_pred.min()) < 0):
        raise DataError(f"label outside 0..{n_classes - 1}")
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (y_true, y_pred), 1)
    return m


def sweep_k(train: Dataset, eval_set: Dataset, k_range=(1, 15)) -> list:
    k_min, k_max = k_range
    if k_min < 1 or k_max > train.n_samples:
        raise KOutOfRange(f"k range {k_min}..{k_max} outside 1..{train.n_samples}")
    return [(k, accuracy(eval_set.y, train_knn(train.X, train.y, k).predict_batch(eval_set.X)))
            for k in range(k_min, k_max + 1)]


# --- models -----------------------------------------------------------------

def train_algorithm(name: str, X, y, knn_k: int = 8, seed: int = 0, forest_trees: int = 100):
    if name == "LogisticRegression":
        return train_logreg(X, y)
    if name == "KNeighborsClassifier":
        return train_knn(X, y, knn_k)
    if name == "RandomForestClassifier":
        return train_forest(X, y, n_trees=forest_trees, seed=seed)
    if name == "DecisionTreeClassifier":
        return train_tree(X, y)
    if name == "GaussianNB":
        return train_gnb(X, y)
    if name.startswith("SVC "):
        return train_svc(X, y, KernelSpec(name.split()[1]))
    raise DataError(f"unknown algorithm {name!r}")


# --- report -----------------------------------------------------------------

@dataclass
class EvaluationReport:
    mode: str
    rows: list                      # [(algorithm, accuracy)], best first
    confusion: dict                 # algorithm -> [[TN, FP], [FN, TP]]
    k_sweep: list                   # [(k, accuracy)]
    config: dict
    class_names: list
    metadata: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)   # plot name -> [(x, y, label)]
    holdout: dict = field(default_factory=dict)  # algorithm -> test-only accuracy
    notes: list = field(default_factory=list)

    def accuracy_of(self, name: str) -> float:
        return dict(self.rows)[name]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "rows": [{"algorithm": a, "accuracy": acc} for a, acc in self.rows],
            "confusion": {a: [list(map(int, r)) for r in m] for a, m in self.confusion.items()},
            "k_sweep": [{"k": k, "accuracy": acc} for k, acc in self.k_sweep],
            "config": self.config,
            "class_names": list(self.class_names),
            "metadata": self.metadata,
            "series": {name: [list(p) for p in pts] for name, pts in self.series.items()},
            "holdout": self.holdout,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        return cls(
            mode=d["mode"],
            rows=[(r["algorithm"], r["accuracy"]) for r in d["rows"]],
            confusion={a: [list(r) for r in m] for a, m in d["confusion"].items()},
            k_sweep=[(r["k"], r["accuracy"]) for r in d["k_sweep"]],
            config=d["config"],
            class_names=d["class_names"],
            metadata=d.get("metadata", {}),
            series={n: [tuple(p) for p in pts] for n, pts in d.get("series", {}).items()},
            holdout=d.get("holdout", {}),
            notes=d.get("notes", []),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvaluationReport":
        return cls.from_dict(json.loads(text))

    def _label(self, name: str) -> str:
        if name == "KNeighborsClassifier":
            return f"{name} {self.config.get('knn_k', '')}".rstrip()
        return name

    def to_text(self) -> str:
        lines = ["  algorithm accuracy"]
        for rank, (name, acc) in enumerate(self.rows):
            lines.append(f"{rank} {self._label(name)} {acc:.2f}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["rank", "algorithm", "accuracy", "tn", "fp", "fn", "tp"]
        if self.holdout:
            header.append("holdout_accuracy")
        writer.writerow(header)
        for rank, (name, acc) in enumerate(self.rows):
            (tn, fp), (fn, tp) = self.confusion[name]
            row = [rank, name, repr(acc), tn, fp, fn, tp]
            if self.holdout:
                row.append(repr(self.holdout[name]))
            writer.writerow(row)
        return buf.getvalue()


def _sorted_rows(accs: dict) -> list:
    # descending accuracy; ties keep the canonical algorithm order
    return sorted(accs.items(), key=lambda item: (-item[1], ALGORITHMS.index(item[0])))


def prepare_features(cfg: ExperimentConfig, features: Dataset):
    """Standardize on all rows, then project (part1) or select (part2).

    Returns the reduced dataset and a metadata dict describing the fitted
    transforms.
    """
    scaler = fit_standardizer(features.X)
    scaled = features.with_features(apply_standardizer(scaler, features.X), features.feature_names)
    meta = {"standardizer": scaler.to_dict(), "fit_rows": "all"}
    if cfg.mode == "part1":
        lda = fit_lda(scaled.X, scaled.y)
        reduced = scaled.with_features(project(lda, scaled.X), ["lda_1"])
        meta["lda"] = lda.to_dict()
    else:
        reduced = select_features(scaled, cfg.selected_features)
    return reduced, meta


def run_experiment(cfg: ExperimentConfig, features: Dataset, threads: int | None = None,
                   return_models: bool = False):
    """Run one recipe end to end and return an :class:`EvaluationReport`
    (plus the trained models when ``return_models`` is set)."""
    if len(np.unique(features.y)) < 2:
        raise DataError("need at least two classes")
    if features.n_samples < 4:
        raise DataError(f"need at least 4 rows, got {features.n_samples}")
    data, meta = prepare_features(cfg, features)
    train, test = stratified_split(data, cfg.split_ratio, cfg.seed)
    knn_k = cfg.effective_knn_k

    def fit(name):
        return train_algorithm(name, train.X, train.y, knn_k, cfg.seed, cfg.forest_trees)

    n_workers = min(thread_count(threads), len(ALGORITHMS))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            models = dict(zip(ALGORITHMS, pool.map(fit, ALGORITHMS)))
    else:
        models = {name: fit(name) for name in ALGORITHMS}

    n_classes = len(features.class_names)
    accs, confusion, holdout = {}, {}, {}
    for name, model in models.items():
        pred = model.predict_batch(data.X)
        cm = confusion_matrix(data.y, pred, n_classes)
        confusion[name] = cm.tolist()
        accs[name] = int(np.trace(cm)) / int(cm.sum())
        if cfg.holdout_only and test.n_samples:
            holdout[name] = accuracy(test.y, model.predict_batch(test.X))

    k_max = min(cfg.k_range[1], train.n_samples)
    k_sweep = sweep_k(train, data, (cfg.k_range[0], k_max))

    meta.update({
        "evaluation_set": "complete dataset (train and test rows)",
        "n_train": train.n_samples,
        "n_test": test.n_samples,
        "n_eval": data.n_samples,
        "train_paths": list(train.paths),
        "model_features": list(data.feature_names),
        "svc_converged": {n: bool(m.converged) for n, m in models.items() if n.startswith("SVC")},
    })

    series = {}
    names = features.class_names
    if cfg.mode == "part1":
        series["projection"] = [(float(s), 0.0, names[c]) for s, c in zip(data.X[:, 0], data.y)]
    else:
        series["scatter"] = [(float(r[0]), float(r[1]) if data.n_features > 1 else 0.0, names[c])
                             for r, c in zip(data.X, data.y)]
    series["k_sweep"] = [(float(k), float(a), "knn") for k, a in k_sweep]

    notes = []
    sweep = dict(k_sweep)
    if cfg.mode == "part2" and 7 in sweep:
        shape_holds = all(sweep[7] >= sweep[k] for k in range(1, 7) if k in sweep)
        notes.append(f"k=7 accuracy {'>=' if shape_holds else '<'} every k in 1..6")

    report = EvaluationReport(
        mode=cfg.mode,
        rows=_sorted_rows(accs),
        confusion=confusion,
        k_sweep=k_sweep,
        config=cfg.to_dict(),
        class_names=list(names),
        metadata=meta,
        series=series,
        holdout=holdout,
        notes=notes,
    )
    return (report, models) if return_models else report


# --- output -----------------------------------------------------------------

def emit_report(r: EvaluationReport, fmt: str, path) -> Path:
    path = Path(path)
    if fmt == "text":
        path.write_text(r.to_text(), encoding="utf-8")
    elif fmt == "json":
        path.write_text(r.to_json(), encoding="utf-8")
    elif fmt == "csv":
        path.write_text(r.to_csv(), encoding="utf-8")
    else:
        raise DataError(f"unknown report format {fmt!r}")
    return path


_AXES = {
    "k_sweep": ("k", "accuracy"),
    "projection": ("lda_1", ""),
    "scatter": DEFAULT_FEATURES,
}


def _svg(points, x_name: str, y_name: str, polyline: bool) -> str:
    width, height, pad = 480, 360, 48
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)

    def span(v):
        lo, hi = float(v.min()), float(v.max())
        return (lo - 0.5, hi + 0.5) if hi == lo else (lo, hi)

    (x0, x1), (y0, y1) = span(xs), span(ys)

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle">{x_name}</text>',
        f'<text x="14" y="{height / 2}" transform="rotate(-90 14 {height / 2})" text-anchor="middle">{y_name}</text>',
        f'<text x="{pad}" y="{height - pad + 16}" text-anchor="middle">{x0:.3g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="middle">{x1:.3g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{pad - 4}" y="{pad}" text-anchor="end">{y1:.3g}</text>',
    ]
    labels = list(dict.fromkeys(p[2] for p in points))
    for i, label in enumerate(labels):
        color = palette[i % len(palette)]
        pts = [(sx(x), sy(y)) for x, y, lab in zip(xs, ys, (p[2] for p in points)) if lab == label]
        if polyline:
            coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            out.append(f'<polyline class="{label}" fill="none" stroke="{color}" points="{coords}"/>')
        else:
            out.append(f'<g class="{label}" fill="{color}">')
            out.extend(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4"/>' for x, y in pts)
            out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot_data(r: EvaluationReport, which: str, out_dir) -> tuple:
    """Write ``<which>.csv`` with ``x,y,label`` rows and a bare SVG of the
    same points.  ``which`` is ``k_sweep``, ``scatter`` or ``projection``."""
    if which not in r.series:
        raise MissingSeries(f"report has no {which!r} series (available: {sorted(r.series)})")
    points = r.series[which]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path, svg_path = out_dir / f"{which}.csv", out_dir / f"{which}.svg"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "label"])
        for x, y, label in points:
            writer.writerow([repr(float(x)), repr(float(y)), label])
    x_name, y_name = _AXES.get(which, ("x", "y"))
    if which == "scatter":
        feats = r.config.get("selected_features", DEFAULT_FEATURES)
        x_name, y_name = feats[0], feats[1] if len(feats) > 1 else ""
    svg_path.write_text(_svg(points, x_name, y_name, polyline=(which == "k_sweep")), encoding="utf-8")
    return csv_path, svg_path

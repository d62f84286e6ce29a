"""Dataset container, standard scaling, two-class Fisher LDA and column selection."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from genreforge.errors import (
    DataError,
    DegenerateClass,
    DimensionMismatch,
    NotTwoClasses,
    TooFewRows,
    TooManyFeatures,
    UnknownFeatureName,
)


@dataclass
class Dataset:
    """Feature matrix ``X`` (n x d), integer labels ``y`` indexing
    ``class_names``, and one name per column."""

    X: np.ndarray
    y: np.ndarray
    class_names: list
    feature_names: list
    paths: list = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        self.y = np.asarray(self.y, dtype=np.int64)
        self.class_names = list(self.class_names)
        self.feature_names = list(self.feature_names)
        self.paths = list(self.paths) or [f"row{i}" for i in range(len(self.y))]
        n, d = self.X.shape
        if len(self.y) != n or len(self.paths) != n:
            raise DimensionMismatch(f"{n} rows but {len(self.y)} labels / {len(self.paths)} paths")
        if len(self.feature_names) != d:
            raise DimensionMismatch(f"{d} columns but {len(self.feature_names)} feature names")
        if n and (self.y.min() < 0 or self.y.max() >= len(self.class_names)):
            raise DataError("label index out of range of class_names")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.X[rows], self.y[rows], self.class_names,
                       self.feature_names, [self.paths[i] for i in rows])

    def with_features(self, X, feature_names) -> "Dataset":
        return Dataset(X, self.y, self.class_names, feature_names, self.paths)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def to_dict(self) -> dict:
        return {"type": "standardizer", "mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        if d.get("type") != "standardizer":
            raise DataError(f"not a standardizer: type={d.get('type')!r}")
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["scale"], dtype=np.float64))


def fit_standardizer(X) -> Standardizer:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewRows("standardization needs at least 2 rows")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0.0] = 1.0
    return Standardizer(mean, scale)


def apply_standardizer(s: Standardizer, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != s.mean.shape[0]:
        raise DimensionMismatch(f"standardizer fitted on {s.mean.shape[0]} columns, got {X.shape[-1]}")
    return (X - s.mean) / s.scale


@dataclass(frozen=True)
class LdaProjection:
    w: np.ndarray
    ridge: float
    n_components: int = 1

    def to_dict(self) -> dict:
        return {"type": "lda", "w": self.w.tolist(), "lambda": self.ridge}

    @classmethod
    def from_dict(cls, d: dict) -> "LdaProjection":
        if d.get("type") != "lda":
            raise DataError(f"not an LDA projection: type={d.get('type')!r}")
        return cls(np.asarray(d["w"], dtype=np.float64), float(d["lambda"]))


def within_class_scatter(X, y) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    scatter = np.zeros((d, d))
    for c in np.unique(y):
        centered = X[y == c] - X[y == c].mean(axis=0)
        scatter += centered.T @ centered
    return scatter


def fit_lda(X, y) -> LdaProjection:
    """Fisher direction ``(S_w + lambda I)^-1 (mu_1 - mu_0)``, unit length,
    signed so class 1 projects above class 0.

    ``lambda = 1e-6 * trace(S_w) / d`` keeps the solve defined when there
    are fewer rows than columns.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes = np.unique(y)
    if len(classes) != 2:
        raise NotTwoClasses(f"LDA here needs exactly 2 classes, got {len(classes)}")
    for c in classes:
        if np.sum(y == c) < 2:
            raise DegenerateClass(f"class {c} has fewer than 2 rows")
    lo, hi = classes
    diff = X[y == hi].mean(axis=0) - X[y == lo].mean(axis=0)
    scatter = within_class_scatter(X, y)
    d = X.shape[1]
    ridge = 1e-6 * np.trace(scatter) / d
    if ridge > 0:
        w = np.linalg.solve(scatter + ridge * np.eye(d), diff)
    else:
        # every class is a single repeated point: mean difference is the direction
        w = diff.copy()
    norm = np.linalg.norm(w)
    if norm == 0 or not np.isfinite(norm):
        raise DegenerateClass("class means coincide; no discriminant direction")
    w /= norm
    if w @ diff < 0:
        w = -w
    return LdaProjection(w, float(ridge))


def project(p: LdaProjection, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != p.w.shape[0]:
        raise DimensionMismatch(f"projection expects {p.w.shape[0]} columns, got {X.shape[-1]}")
    return (X @ p.w)[:, None]


def select_features(ds: Dataset, names) -> Dataset:
    names = list(names)
    missing = [n for n in names if n not in ds.feature_names]
    if missing:
        raise UnknownFeatureName(f"unknown feature(s): {', '.join(missing)}")
    if len(names) >= ds.n_samples:
        raise TooManyFeatures(
            f"{len(names)} features selected for {ds.n_samples} samples; "
            "keep fewer features than samples"
        )
    cols = [ds.feature_names.index(n) for n in names]
    return ds.with_features(ds.X[:, cols], names)

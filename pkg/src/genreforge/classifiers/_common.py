from __future__ import annotations

import numpy as np

from genreforge.errors import DimensionMismatch, EmptyDataset, NotTwoClasses, SingleClass


def as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D feature matrix, got shape {X.shape}")
    return X


def check_xy(X, y):
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise EmptyDataset("no training rows")
    if len(y) != X.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} rows but {len(y)} labels")
    return X, y


def binary_signs(y):
    """Map the two label values to -1 / +1 (lower label -> -1)."""
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClass("training data contains a single class")
    if len(classes) > 2:
        raise NotTwoClasses(f"binary classifier got {len(classes)} classes")
    return np.where(y == classes[1], 1.0, -1.0), (int(classes[0]), int(classes[1]))


def check_query(X, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :] if n_features > 1 or X.shape[0] == 1 else X[:, None]
    if X.ndim != 2 or X.shape[1] != n_features:
        raise DimensionMismatch(f"model expects {n_features} features, got shape {X.shape}")
    return X


class Classifier:
    """Shared predict surface: subclasses implement ``predict_batch``."""

    n_features: int

    def predict(self, x) -> int:
        x = np.asarray(x, dtype=np.float64).reshape(1, -1)
        return int(self.predict_batch(x)[0])

    def predict_batch(self, X) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

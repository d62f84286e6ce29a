from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from genreforge.classifiers._common import Classifier, check_query, check_xy
from genreforge.errors import SingleClass


@dataclass(frozen=True)
class GaussianNbModel(Classifier):
    classes: np.ndarray
    means: np.ndarray      # (n_classes, d)
    variances: np.ndarray  # (n_classes, d), already floored
    priors: np.ndarray
    var_floor: float

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = check_query(X, self.n_features)
        diff = X[:, None, :] - self.means[None, :, :]
        log_density = -0.5 * (np.log(2 * np.pi * self.variances)[None] + diff * diff / self.variances[None])
        return np.log(self.priors)[None, :] + log_density.sum(axis=2)

    def posterior(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def predict_batch(self, X) -> np.ndarray:
        return self.classes[np.argmax(self.joint_log_likelihood(X), axis=1)]

    def to_dict(self) -> dict:
        return {"type": "gnb", "classes": self.classes.tolist(), "means": self.means.tolist(),
                "variances": self.variances.tolist(), "priors": self.priors.tolist(),
                "var_floor": self.var_floor}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianNbModel":
        return cls(np.asarray(d["classes"], dtype=np.int64),
                   np.asarray(d["means"], dtype=np.float64),
                   np.asarray(d["variances"], dtype=np.float64),
                   np.asarray(d["priors"], dtype=np.float64),
                   float(d["var_floor"]))


def train_gnb(X, y, var_smoothing: float = 1e-9) -> GaussianNbModel:
    """Per-class Gaussian fit with population variances floored at
    ``var_smoothing * max_j Var(X[:, j])``."""
    X, y = check_xy(X, y)
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClass("GaussianNB needs at least two classes")
    floor = var_smoothing * float(X.var(axis=0).max())
    if floor <= 0:
        floor = var_smoothing
    means = np.array([X[y == c].mean(axis=0) for c in classes])
    variances = np.maximum(np.array([X[y == c].var(axis=0) for c in classes]), floor)
    priors = np.array([np.mean(y == c) for c in classes])
    return GaussianNbModel(classes, means, variances, priors, floor)

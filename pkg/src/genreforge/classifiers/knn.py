from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from genreforge.classifiers._common import Classifier, check_query, check_xy
from genreforge.errors import KOutOfRange


@dataclass(frozen=True)
class KnnModel(Classifier):
    """k-nearest-neighbour vote under Euclidean distance.

    Neighbours tied on distance are ranked by training row index.  A vote tie
    between classes goes to the class whose tied neighbours are closer in
    total, then to the lower class index.
    """

    X_train: np.ndarray
    y_train: np.ndarray
    k: int

    @property
    def n_features(self) -> int:
        return self.X_train.shape[1]

    def neighbors(self, X):
        X = check_query(X, self.n_features)
        diff = X[:, None, :] - self.X_train[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        order = np.argsort(dist, axis=1, kind="stable")[:, : self.k]
        return order, np.take_along_axis(dist, order, axis=1)

    def predict_batch(self, X) -> np.ndarray:
        order, dist = self.neighbors(X)
        out = np.empty(order.shape[0], dtype=np.int64)
        for q in range(order.shape[0]):
            labels = self.y_train[order[q]]
            best = None
            for c in np.unique(labels):
                mask = labels == c
                key = (-int(mask.sum()), float(dist[q][mask].sum()), int(c))
                if best is None or key < best:
                    best = key
            out[q] = best[2]
        return out

    def to_dict(self) -> dict:
        return {"type": "knn", "X_train": self.X_train.tolist(),
                "y_train": self.y_train.tolist(), "k": self.k}

    @classmethod
    def from_dict(cls, d: dict) -> "KnnModel":
        return cls(np.asarray(d["X_train"], dtype=np.float64),
                   np.asarray(d["y_train"], dtype=np.int64), int(d["k"]))


def train_knn(X, y, k: int) -> KnnModel:
    X, y = check_xy(X, y)
    if not 1 <= k <= X.shape[0]:
        raise KOutOfRange(f"k={k} outside 1..{X.shape[0]}")
    return KnnModel(X.copy(), y.copy(), int(k))

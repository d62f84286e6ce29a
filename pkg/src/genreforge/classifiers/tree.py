"""CART decision trees (Gini) and a bagged random forest built from them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from genreforge.classifiers._common import Classifier, check_query, check_xy

# impurity decreases closer than this are treated as ties
_TIE = 1e-12


def gini(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def _best_split(X, y, rows, features, n_classes):
    """Return ``(feature, threshold, decrease)`` maximizing the Gini decrease
    over ``features`` (scanned in the given order) or ``None``."""
    n = len(rows)
    parent = gini(np.bincount(y[rows], minlength=n_classes))
    best = None
    for j in features:
        values = X[rows, j]
        order = np.argsort(values, kind="stable")
        v = values[order]
        valid = np.flatnonzero(v[:-1] < v[1:])
        if valid.size == 0:
            continue
        onehot = np.eye(n_classes)[y[rows][order]]
        left = np.cumsum(onehot, axis=0)[valid]
        right = onehot.sum(axis=0) - left
        n_left = (valid + 1).astype(np.float64)
        n_right = n - n_left
        g_left = 1.0 - np.sum((left / n_left[:, None]) ** 2, axis=1)
        g_right = 1.0 - np.sum((right / n_right[:, None]) ** 2, axis=1)
        decrease = parent - (n_left * g_left + n_right * g_right) / n
        i = int(np.argmax(decrease))  # first maximum = lowest threshold
        if best is None or decrease[i] > best[2] + _TIE:
            lo, hi = v[valid[i]], v[valid[i] + 1]
            threshold = (lo + hi) / 2.0
            if not lo <= threshold < hi:
                threshold = lo
            best = (int(j), float(threshold), float(decrease[i]))
    return best


@dataclass(frozen=True)
class TreeModel(Classifier):
    """Flat node arrays; ``feature[i] == -1`` marks a leaf carrying
    ``label[i]``.  Samples with ``x[feature] <= threshold`` go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray
    n_features: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        def walk(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))
        return walk(0)

    def apply(self, X) -> np.ndarray:
        X = check_query(X, self.n_features)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            active = f >= 0
            if not active.any():
                return node
            go_left = X[rows[active], f[active]] <= self.threshold[node[active]]
            node[active] = np.where(go_left, self.left[node[active]], self.right[node[active]])

    def predict_batch(self, X) -> np.ndarray:
        return self.label[self.apply(X)]

    def to_dict(self) -> dict:
        return {"type": "tree", "feature": self.feature.tolist(),
                "threshold": self.threshold.tolist(), "left": self.left.tolist(),
                "right": self.right.tolist(), "label": self.label.tolist(),
                "n_features": self.n_features}

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        return cls(np.asarray(d["feature"], dtype=np.int64),
                   np.asarray(d["threshold"], dtype=np.float64),
                   np.asarray(d["left"], dtype=np.int64),
                   np.asarray(d["right"], dtype=np.int64),
                   np.asarray(d["label"], dtype=np.int64),
                   int(d["n_features"]))


def _grow(X, y, max_depth, min_samples_split, max_features=None, rng=None) -> TreeModel:
    n_classes = int(y.max()) + 1
    d = X.shape[1]
    feature, threshold, left, right, label = [], [], [], [], []

    def candidates():
        if max_features is None or max_features >= d:
            yield list(range(d))
            return
        perm = rng.permutation(d)
        yield sorted(perm[:max_features].tolist())
        # all drawn features constant at this node: fall back to the rest
        yield sorted(perm[max_features:].tolist())

    def build(rows, depth):
        node = len(feature)
        counts = np.bincount(y[rows], minlength=n_classes)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        label.append(int(np.argmax(counts)))
        if (np.count_nonzero(counts) <= 1
                or (max_depth is not None and depth >= max_depth)
                or len(rows) < min_samples_split):
            return node
        split = None
        for feats in candidates():
            split = _best_split(X, y, rows, feats, n_classes)
            if split is not None:
                break
        if split is None:
            return node
        j, t, _ = split
        go_left = X[rows, j] <= t
        feature[node] = j
        threshold[node] = t
        left[node] = build(rows[go_left], depth + 1)
        right[node] = build(rows[~go_left], depth + 1)
        return node

    build(np.arange(X.shape[0]), 0)
    return TreeModel(np.array(feature, dtype=np.int64), np.array(threshold),
                     np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                     np.array(label, dtype=np.int64), d)


def train_tree(X, y, max_depth: int | None = None, min_samples_split: int = 2) -> TreeModel:
    """CART with Gini impurity.

    Every feature is scanned at each node; candidate thresholds are midpoints
    between consecutive distinct values.  Ties on impurity decrease go to the
    lower feature index, then the lower threshold.  A split is taken even when
    it does not lower impurity (needed for XOR-like data).
    """
    X, y = check_xy(X, y)
    return _grow(X, y, max_depth, min_samples_split)


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    # Philox is counter-based: stream t depends only on (seed, t)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, tree_index])))


@dataclass(frozen=True)
class ForestModel(Classifier):
    trees: tuple
    seed: int
    n_classes: int

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def predict_batch(self, X) -> np.ndarray:
        X = check_query(X, self.n_features)
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            votes[rows, tree.predict_batch(X)] += 1
        return np.argmax(votes, axis=1)

    def to_dict(self) -> dict:
        return {"type": "forest", "seed": self.seed, "n_classes": self.n_classes,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls(tuple(TreeModel.from_dict(t) for t in d["trees"]), int(d["seed"]), int(d["n_classes"]))


def train_forest(X, y, n_trees: int = 100, seed: int = 0, max_features: int | None = None,
                 bootstrap: bool = True, max_depth: int | None = None,
                 min_samples_split: int = 2) -> ForestModel:
    """Bagged CART trees with ``max_features`` (default ``ceil(sqrt(d))``)
    features drawn per split; majority vote, ties to the lower class."""
    X, y = check_xy(X, y)
    n, d = X.shape
    if max_features is None:
        max_features = int(np.ceil(np.sqrt(d)))
    trees = []
    for t in range(n_trees):
        rng = tree_rng(seed, t)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        Xb, yb = X[rows], y[rows]
        trees.append(_grow(Xb, yb, max_depth, min_samples_split, max_features, rng))
    return ForestModel(tuple(trees), int(seed), int(y.max()) + 1)

"""From-scratch classifiers behind one train / predict contract.

Every trainer returns an immutable model with ``predict(x)``,
``predict_batch(X)`` and ``to_dict()``; :func:`model_from_dict` restores any
of them from JSON-ready dicts.
"""
from __future__ import annotations

import json

import numpy as np

from genreforge.classifiers.knn import KnnModel, train_knn
from genreforge.classifiers.logreg import LogRegModel, logistic_loss_grad, train_logreg
from genreforge.classifiers.naive_bayes import GaussianNbModel, train_gnb
from genreforge.classifiers.svm import (
    ConvergenceWarning,
    KernelSpec,
    SvcModel,
    dual_objective,
    kernel_eval,
    kernel_matrix,
    train_svc,
)
from genreforge.classifiers.tree import ForestModel, TreeModel, gini, train_forest, train_tree
from genreforge.errors import DataError

_MODEL_TYPES = {
    "logreg": LogRegModel,
    "knn": KnnModel,
    "gnb": GaussianNbModel,
    "tree": TreeModel,
    "forest": ForestModel,
    "svc": SvcModel,
}


def predict(model, x) -> int:
    return model.predict(x)


def predict_batch(model, X) -> np.ndarray:
    return model.predict_batch(X)


def model_from_dict(d: dict):
    try:
        cls = _MODEL_TYPES[d["type"]]
    except KeyError:
        raise DataError(f"unknown model type {d.get('type')!r}") from None
    return cls.from_dict(d)


def dumps_model(model) -> str:
    return json.dumps(model.to_dict())


def loads_model(text: str):
    return model_from_dict(json.loads(text))


__all__ = [
    "ConvergenceWarning", "ForestModel", "GaussianNbModel", "KernelSpec", "KnnModel",
    "LogRegModel", "SvcModel", "TreeModel", "dual_objective", "dumps_model", "gini",
    "kernel_eval", "kernel_matrix", "loads_model", "logistic_loss_grad", "model_from_dict",
    "predict", "predict_batch", "train_forest", "train_gnb", "train_knn", "train_logreg",
    "train_svc", "train_tree",
]

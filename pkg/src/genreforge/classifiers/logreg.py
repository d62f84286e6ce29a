"""L2-regularized logistic regression fitted by gradient descent with a
backtracking (Armijo) line search."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from genreforge.classifiers._common import Classifier, binary_signs, check_query, check_xy


def logistic_loss_grad(params, X, signs, l2_strength: float = 1.0):
    """Loss ``sum log(1 + exp(-s_i (w.x_i + b))) + |w|^2 / (2 l2_strength)``
    and its gradient with respect to ``params = [w..., b]``."""
    w, b = params[:-1], params[-1]
    margin = signs * (X @ w + b)
    loss = np.logaddexp(0.0, -margin).sum() + (w @ w) / (2.0 * l2_strength)
    # d/dz log(1 + exp(-s z)) = -s * sigmoid(-s z)
    g = -signs * np.exp(-np.logaddexp(0.0, margin))
    grad = np.empty_like(params)
    grad[:-1] = X.T @ g + w / l2_strength
    grad[-1] = g.sum()
    return float(loss), grad


@dataclass(frozen=True)
class LogRegModel(Classifier):
    weights: np.ndarray
    bias: float
    classes: tuple
    converged: bool = True
    n_iter: int = 0
    loss_history: tuple = field(default=(), compare=False, repr=False)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def decision_function(self, X) -> np.ndarray:
        return check_query(X, self.n_features) @ self.weights + self.bias

    def predict_batch(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) > 0, self.classes[1], self.classes[0])

    def to_dict(self) -> dict:
        return {"type": "logreg", "weights": self.weights.tolist(), "bias": self.bias,
                "classes": list(self.classes), "converged": self.converged, "n_iter": self.n_iter}

    @classmethod
    def from_dict(cls, d: dict) -> "LogRegModel":
        return cls(np.asarray(d["weights"], dtype=np.float64), float(d["bias"]),
                   tuple(d["classes"]), bool(d["converged"]), int(d["n_iter"]))


def train_logreg(X, y, l2_strength: float = 1.0, max_iter: int = 1000, tol: float = 1e-6) -> LogRegModel:
    X, y = check_xy(X, y)
    signs, classes = binary_signs(y)
    params = np.zeros(X.shape[1] + 1)
    loss, grad = logistic_loss_grad(params, X, signs, l2_strength)
    history = [loss]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(grad)) < tol:
            converged = True
            it -= 1
            break
        g2 = grad @ grad
        # let the step grow back after a run of accepted steps
        step = min(step * 2.0, 1e6)
        while True:
            trial = params - step * grad
            trial_loss, trial_grad = logistic_loss_grad(trial, X, signs, l2_strength)
            if trial_loss <= loss - 0.5 * step * g2 or step < 1e-20:
                break
            step *= 0.5
        if trial_loss > loss:
            # no descent possible at machine precision
            break
        params, loss, grad = trial, trial_loss, trial_grad
        history.append(loss)
    else:
        converged = bool(np.max(np.abs(grad)) < tol)
    return LogRegModel(params[:-1].copy(), float(params[-1]), classes, converged, it, tuple(history))

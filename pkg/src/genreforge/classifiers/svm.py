"""Soft-margin kernel SVM trained with a simplified SMO.

The dual

    max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
    s.t. 0 <= a_i <= C,  sum(a_i y_i) = 0

is optimized two multipliers at a time.  The first multiplier of a pair is
any KKT violator; the second is tried in order of decreasing |E_i - E_j|,
so the largest-step candidate goes first and the rest serve as fallbacks.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from genreforge.classifiers._common import Classifier, binary_signs, check_query, check_xy
from genreforge.errors import DataError, DimensionMismatch

KERNELS = ("linear", "poly", "rbf", "sigmoid")
# smallest multiplier change that counts as progress
ALPHA_STEP = 1e-8


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    gamma: float | None = None    # None -> resolved to 1/(d * Var(X)) at training
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise DataError(f"unknown kernel {self.kind!r}; expected one of {KERNELS}")
        if self.gamma is not None and self.gamma <= 0:
            raise DataError(f"gamma must be positive, got {self.gamma}")
        if self.degree < 1:
            raise DataError(f"degree must be >= 1, got {self.degree}")

    def resolved(self, X) -> "KernelSpec":
        if self.gamma is not None:
            return self
        var = float(np.var(X))
        gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
        return KernelSpec(self.kind, gamma, self.degree, self.coef0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma, "degree": self.degree, "coef0": self.coef0}


def kernel_matrix(spec: KernelSpec, A, B) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"kernel inputs have {A.shape[1]} and {B.shape[1]} dims")
    gamma = 1.0 if spec.gamma is None else spec.gamma
    if spec.kind == "linear":
        return A @ B.T
    if spec.kind == "poly":
        return (gamma * (A @ B.T) + spec.coef0) ** spec.degree
    if spec.kind == "sigmoid":
        return np.tanh(gamma * (A @ B.T) + spec.coef0)
    # explicit differences keep K(x, x) exactly 1
    sq = np.empty((A.shape[0], B.shape[0]))
    for i, a in enumerate(A):
        diff = B - a
        sq[i] = np.einsum("ij,ij->i", diff, diff)
    return np.exp(-gamma * sq)


def kernel_eval(spec: KernelSpec, x, z) -> float:
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise DimensionMismatch(f"kernel inputs have shapes {x.shape} and {z.shape}")
    return float(kernel_matrix(spec, x.reshape(1, -1), z.reshape(1, -1))[0, 0])


def dual_objective(alpha, signs, K) -> float:
    v = alpha * signs
    return float(alpha.sum() - 0.5 * v @ K @ v)


@dataclass(frozen=True)
class SvcModel(Classifier):
    support_vectors: np.ndarray
    dual_coef: np.ndarray          # alpha_i * y_i for each support vector
    support: np.ndarray            # training row index of each support vector
    bias: float
    kernel: KernelSpec
    C: float
    classes: tuple
    converged: bool = True
    n_passes: int = 0

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def alphas(self) -> np.ndarray:
        return np.abs(self.dual_coef)

    def decision_function(self, X) -> np.ndarray:
        X = check_query(X, self.n_features)
        if len(self.dual_coef) == 0:
            return np.full(X.shape[0], self.bias)
        return kernel_matrix(self.kernel, X, self.support_vectors) @ self.dual_coef + self.bias

    def predict_batch(self, X) -> np.ndarray:
        f = self.decision_function(X)
        return np.where(f > 0, self.classes[1], self.classes[0])

    def to_dict(self) -> dict:
        return {
            "type": "svc",
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "support": self.support.tolist(),
            "bias": self.bias,
            "kernel": self.kernel.to_dict(),
            "C": self.C,
            "classes": list(self.classes),
            "converged": self.converged,
            "n_passes": self.n_passes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvcModel":
        sv = np.asarray(d["support_vectors"], dtype=np.float64)
        return cls(
            sv.reshape(len(d["dual_coef"]), -1) if sv.size == 0 else sv,
            np.asarray(d["dual_coef"], dtype=np.float64),
            np.asarray(d["support"], dtype=np.int64),
            float(d["bias"]),
            KernelSpec(**d["kernel"]),
            float(d["C"]),
            tuple(d["classes"]),
            bool(d["converged"]),
            int(d["n_passes"]),
        )


def _refit_bias(alpha, signs, g, C) -> float:
    """Bias implied by the current multipliers: the mean over free ones, or
    the middle of the interval allowed by the bound ones when none are free.
    ``g`` is the decision value without bias."""
    free = (alpha > ALPHA_STEP) & (alpha < C - ALPHA_STEP)
    target = signs - g
    if np.any(free):
        return float(np.mean(target[free]))
    # alpha_i = 0 needs y_i (g_i + b) >= 1, alpha_i = C needs <= 1
    at_zero = alpha <= ALPHA_STEP
    lower = target[(at_zero & (signs > 0)) | (~at_zero & (signs < 0))]
    upper = target[(at_zero & (signs < 0)) | (~at_zero & (signs > 0))]
    if lower.size and upper.size:
        return float((lower.max() + upper.min()) / 2.0)
    if lower.size:
        return float(lower.max())
    return float(upper.min())


def train_svc(X, y, kernel: KernelSpec | str = "rbf", C: float = 1.0,
              tol: float = 1e-3, max_passes: int = 200) -> SvcModel:
    X, y = check_xy(X, y)
    signs, classes = binary_signs(y)
    if isinstance(kernel, str):
        kernel = KernelSpec(kernel)
    kernel = kernel.resolved(X)
    K = kernel_matrix(kernel, X, X)
    n = X.shape[0]
    alpha = np.zeros(n)
    b = 0.0

    def errors():
        return K @ (alpha * signs) + b - signs

    def take_step(i, j, E):
        nonlocal b
        if i == j:
            return False
        ai, aj = alpha[i], alpha[j]
        si, sj = signs[i], signs[j]
        if si != sj:
            L, H = max(0.0, aj - ai), min(C, C + aj - ai)
        else:
            L, H = max(0.0, ai + aj - C), min(C, ai + aj)
        if H - L < ALPHA_STEP:
            return False
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta > 0:
            aj_new = min(H, max(L, aj + sj * (E[i] - E[j]) / eta))
        else:
            # non-PSD kernel: pick the better end of the segment
            objs = []
            for cand in (L, H):
                trial = alpha.copy()
                trial[j] = cand
                trial[i] = ai + si * sj * (aj - cand)
                objs.append(dual_objective(trial, signs, K))
            if abs(objs[0] - objs[1]) < 1e-12:
                return False
            aj_new = L if objs[0] > objs[1] else H
        if abs(aj_new - aj) < ALPHA_STEP:
            return False
        ai_new = min(C, max(0.0, ai + si * sj * (aj - aj_new)))
        di, dj = ai_new - ai, aj_new - aj
        b1 = b - E[i] - si * di * K[i, i] - sj * dj * K[i, j]
        b2 = b - E[j] - si * di * K[i, j] - sj * dj * K[j, j]
        if 0 < ai_new < C:
            b = b1
        elif 0 < aj_new < C:
            b = b2
        else:
            b = (b1 + b2) / 2.0
        alpha[i], alpha[j] = ai_new, aj_new
        return True

    # rounding can leave a multiplier a hair inside its bound
    lower, upper = 1e-12 * C, C - 1e-12 * C
    converged = False
    passes = 0
    while passes < max_passes:
        passes += 1
        changed = 0
        for i in range(n):
            E = errors()
            r = signs[i] * E[i]
            if not ((r < -tol and alpha[i] < upper) or (r > tol and alpha[i] > lower)):
                continue
            order = np.argsort(-np.abs(E[i] - E), kind="stable")
            for j in order:
                if take_step(i, int(j), E):
                    changed += 1
                    break
        if changed == 0:
            E = errors()
            r = signs * E
            violated = ((r < -tol) & (alpha < upper)) | ((r > tol) & (alpha > lower))
            if not violated.any():
                converged = True
                break
            # no pair can move, so the remaining violation sits in b
            b_new = _refit_bias(alpha, signs, E + signs - b, C)
            if abs(b_new - b) <= 1e-12 * max(1.0, abs(b)):
                break
            b = b_new
    if not converged:
        warnings.warn(f"SMO stopped after {passes} passes with KKT violations left",
                      ConvergenceWarning, stacklevel=2)

    # b is kept as SMO left it: the final pass verified KKT against this value
    support = np.flatnonzero(alpha > 0)
    return SvcModel(
        support_vectors=X[support].copy(),
        dual_coef=(alpha * signs)[support],
        support=support,
        bias=b,
        kernel=kernel,
        C=float(C),
        classes=classes,
        converged=converged,
        n_passes=passes,
    )


def full_alphas(model: SvcModel, n_train: int) -> np.ndarray:
    alpha = np.zeros(n_train)
    alpha[model.support] = model.alphas
    return alpha

"""C-SVM trained by sequential minimal optimization on a sigmoid kernel.

Solves the dual

    min_a 0.5 a^T Q a - sum(a),   0 <= a_i <= C,  sum(a_i y_i) = 0,
    Q_ij = y_i y_j tanh(gamma * x_i . x_j + coef0)

with second-order working-set selection. The sigmoid kernel is not positive
definite, so non-positive curvature along a pair is replaced by ``TAU``.
"""
from __future__ import annotations

from collections import OrderedDict

import numpy as np
import scipy.sparse as sp

from .spec import ConvergenceError

TAU = 1e-12
_FULL_GRAM_MAX = 3000
_CACHE_COLUMNS = 2000


def scale_gamma(X) -> float:
    """1 / (n_features * variance of all matrix entries, zeros included)."""
    X = sp.csr_matrix(X, dtype=float)
    n, d = X.shape
    total = n * d
    mean = X.sum() / total
    var = X.multiply(X).sum() / total - mean * mean
    return 1.0 / (d * var) if var > 0 else 1.0


def kernel(A, B, gamma: float, coef0: float) -> np.ndarray:
    G = A @ B.T
    G = G.toarray() if sp.issparse(G) else np.asarray(G)
    return np.tanh(gamma * G + coef0)


class _KernelColumns:
    def __init__(self, X: sp.csr_matrix, gamma: float, coef0: float):
        self.X, self.gamma, self.coef0 = X, gamma, coef0
        n = X.shape[0]
        self.full = kernel(X, X, gamma, coef0) if n <= _FULL_GRAM_MAX else None
        self.cache: OrderedDict[int, np.ndarray] = OrderedDict()
        sq = np.asarray(X.multiply(X).sum(axis=1)).ravel()
        self.diag = np.tanh(gamma * sq + coef0)

    def __getitem__(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[:, i]
        col = self.cache.get(i)
        if col is None:
            col = kernel(self.X, self.X[i], self.gamma, self.coef0).ravel()
            self.cache[i] = col
            if len(self.cache) > _CACHE_COLUMNS:
                self.cache.popitem(last=False)
        else:
            self.cache.move_to_end(i)
        return col


def _select_pair(alpha, G, y, C, K: _KernelColumns, eps: float):
    yG = -y * G
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    if not up.any() or not low.any():
        return None, 0.0
    up_idx = np.flatnonzero(up)
    i = int(up_idx[np.argmax(yG[up_idx])])
    g_max = yG[i]
    g_min = yG[low].min()
    gap = g_max - g_min
    if gap < eps:
        return None, gap
    Ki = K[i]
    b = g_max - yG
    cand = low & (b > 0)
    if not cand.any():
        return None, gap
    a = K.diag[i] + K.diag - 2.0 * Ki
    a = np.where(a > 0, a, TAU)
    obj = np.full(len(alpha), np.inf)
    obj[cand] = -(b[cand] ** 2) / a[cand]
    j = int(np.argmin(obj))
    return (i, j), gap


def solve_dual(K: _KernelColumns, y: np.ndarray, C: float, eps: float, max_iter: int):
    n = len(y)
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    while True:
        pair, gap = _select_pair(alpha, G, y, C, K, eps)
        if pair is None:
            break
        if it >= max_iter:
            raise ConvergenceError(f"SMO did not converge in {max_iter} iterations", gap)
        it += 1
        i, j = pair
        Ki, Kj = K[i], K[j]
        Qij = y[i] * y[j] * Ki[j]
        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = K.diag[i] + K.diag[j] + 2.0 * Qij
            quad = quad if quad > 0 else TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, diff
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, C - diff
            elif alpha[j] > C:
                alpha[j], alpha[i] = C, C + diff
        else:
            quad = K.diag[i] + K.diag[j] - 2.0 * Qij
            quad = quad if quad > 0 else TAU
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, total - C
                if alpha[j] > C:
                    alpha[j], alpha[i] = C, total - C
            else:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, total
                if alpha[i] < 0:
                    alpha[i], alpha[j] = 0.0, total
        d_i, d_j = alpha[i] - ai_old, alpha[j] - aj_old
        # column of Q for index t is y * y_t * K[:, t]
        G += y * (y[i] * d_i * Ki + y[j] * d_j * Kj)
    return alpha, G, it


def _bias(alpha, G, y, C) -> float:
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = yG[free].mean()
    else:
        at_up = alpha >= C
        at_low = ~at_up
        ub_mask = (at_up & (y < 0)) | (at_low & (y > 0))
        lb_mask = (at_up & (y > 0)) | (at_low & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = (ub + lb) / 2.0
    return -float(rho)


def fit(X, y: np.ndarray, C: float = 1.0, gamma="scale", coef0: float = 0.0, tol: float = 1e-3, max_passes: int = 10_000) -> dict:
    X = sp.csr_matrix(X, dtype=float)
    g = scale_gamma(X) if gamma == "scale" else float(gamma)
    y_pm = np.where(np.asarray(y) == 1, 1.0, -1.0)
    K = _KernelColumns(X, g, coef0)
    alpha, G, n_iter = solve_dual(K, y_pm, C, tol, max_passes * X.shape[0])
    sv = np.flatnonzero(alpha > 0)
    return {
        "support_vectors": X[sv],
        "support": sv.astype(np.int64),
        "alpha": alpha[sv],
        "dual_coef": alpha[sv] * y_pm[sv],
        "intercept": _bias(alpha, G, y_pm, C),
        "gamma": g,
        "coef0": float(coef0),
        "n_iter": n_iter,
    }


def decision(state: dict, X) -> np.ndarray:
    X = sp.csr_matrix(X, dtype=float)
    if state["support_vectors"].shape[0] == 0:
        return np.full(X.shape[0], state["intercept"])
    Kx = kernel(X, state["support_vectors"], state["gamma"], state["coef0"])
    return Kx @ state["dual_coef"] + state["intercept"]


def score(state: dict, X) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-decision(state, X)))

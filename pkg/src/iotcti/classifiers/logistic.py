"""L2-regularized logistic regression fitted by truncated Newton (Newton-CG).

Objective over weights ``w`` and unpenalized bias ``b`` with labels in {-1, +1}::

    0.5 * ||w||^2 + C * sum_i log(1 + exp(-y_i * (w . x_i + b)))
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit


def _margins(theta: np.ndarray, X) -> np.ndarray:
    return np.asarray(X @ theta[:-1]).ravel() + theta[-1]


def objective(theta: np.ndarray, X, y_pm: np.ndarray, C: float) -> float:
    """Objective at ``theta = [w..., b]``; ``y_pm`` holds labels in {-1, +1}."""
    w = theta[:-1]
    z = _margins(theta, X)
    return 0.5 * float(w @ w) + C * float(np.sum(np.logaddexp(0.0, -y_pm * z)))


def gradient(theta: np.ndarray, X, y_pm: np.ndarray, C: float) -> np.ndarray:
    z = _margins(theta, X)
    r = -C * y_pm * expit(-y_pm * z)
    g = np.empty_like(theta)
    g[:-1] = theta[:-1] + np.asarray(X.T @ r).ravel()
    g[-1] = r.sum()
    return g


def _hess_vec(v: np.ndarray, X, curv: np.ndarray) -> np.ndarray:
    # curv = C * sigma(z) * (1 - sigma(z))
    t = curv * (np.asarray(X @ v[:-1]).ravel() + v[-1])
    out = np.empty_like(v)
    out[:-1] = v[:-1] + np.asarray(X.T @ t).ravel()
    out[-1] = t.sum()
    return out


def _conjugate_gradient(hv, g: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Approximately solve H p = -g."""
    p = np.zeros_like(g)
    r = -g.copy()
    d = r.copy()
    rr = r @ r
    for _ in range(max_iter):
        if np.sqrt(rr) <= tol:
            break
        Hd = hv(d)
        curvature = d @ Hd
        if curvature <= 0:
            break
        step = rr / curvature
        p += step * d
        r -= step * Hd
        rr_new = r @ r
        d = r + (rr_new / rr) * d
        rr = rr_new
    return p if p.any() else -g


def fit(X, y: np.ndarray, C: float = 10.0, max_iter: int = 100, tol: float = 1e-6) -> dict:
    y_pm = np.where(y == 1, 1.0, -1.0)
    theta = np.zeros(X.shape[1] + 1)
    f = objective(theta, X, y_pm, C)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        g = gradient(theta, X, y_pm, C)
        gnorm = np.linalg.norm(g)
        if gnorm <= tol:
            n_iter -= 1
            break
        s = expit(_margins(theta, X))
        curv = C * s * (1.0 - s)
        p = _conjugate_gradient(
            lambda v: _hess_vec(v, X, curv),
            g,
            tol=min(0.5, np.sqrt(gnorm)) * gnorm,
            max_iter=min(len(theta), 250),
        )
        # backtracking Armijo line search
        slope = g @ p
        step = 1.0
        while True:
            cand = theta + step * p
            f_new = objective(cand, X, y_pm, C)
            if f_new <= f + 1e-4 * step * slope or step < 1e-10:
                break
            step *= 0.5
        theta, f = cand, f_new
    return {"coef": theta[:-1].copy(), "intercept": float(theta[-1]), "n_iter": n_iter}


def decision(state: dict, X) -> np.ndarray:
    return np.asarray(X @ state["coef"]).ravel() + state["intercept"]


def score(state: dict, X) -> np.ndarray:
    return expit(decision(state, X))

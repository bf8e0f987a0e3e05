"""Multinomial naive Bayes with additive smoothing."""
from __future__ import annotations

import numpy as np
from scipy.special import logsumexp


def fit(X, y: np.ndarray, alpha: float = 0.1, fit_prior: bool = True) -> dict:
    if X.min() < 0:
        raise ValueError("multinomial naive Bayes needs nonnegative features")
    counts = np.vstack([np.asarray(X[y == c].sum(axis=0)).ravel() for c in (0, 1)]) + alpha
    feature_log_prob = np.log(counts) - np.log(counts.sum(axis=1, keepdims=True))
    if fit_prior:
        class_count = np.array([np.sum(y == 0), np.sum(y == 1)], dtype=float)
        class_log_prior = np.log(class_count / class_count.sum())
    else:
        class_log_prior = np.full(2, -np.log(2.0))
    return {"class_log_prior": class_log_prior, "feature_log_prob": feature_log_prob}


def joint_log_likelihood(state: dict, X) -> np.ndarray:
    return np.asarray(X @ state["feature_log_prob"].T) + state["class_log_prior"]


def score(state: dict, X) -> np.ndarray:
    """P(related | x) for every row of ``X``."""
    jll = joint_log_likelihood(state, X)
    return np.exp(jll[:, 1] - logsumexp(jll, axis=1))

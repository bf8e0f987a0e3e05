"""Random forest of Gini trees with bootstrap resampling and per-split feature subsets."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import tree as _tree

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def tree_seed(master_seed: int, i: int) -> int:
    """Seed of tree ``i``; each tree can be rebuilt on its own from it."""
    return (master_seed & _MASK64) ^ splitmix64(i)


def features_per_split(max_features: float, d: int) -> int:
    return max(1, int(np.floor(max_features * d)))


def fit_one(X: sp.csr_matrix, y: np.ndarray, seed: int, max_features: int, bootstrap: bool, min_samples_leaf: int) -> dict:
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    if bootstrap:
        rows = rng.integers(0, n, size=n)
        X, y = X[rows], y[rows]
    return _tree.build_tree(X, y, min_samples_leaf, max_features, rng)


def fit(
    X,
    y: np.ndarray,
    seed: int,
    n_estimators: int = 300,
    max_features: float = 0.75,
    bootstrap: bool = True,
    min_samples_leaf: int = 1,
) -> dict:
    X = sp.csr_matrix(X, dtype=float)
    m = features_per_split(max_features, X.shape[1])
    seeds = [tree_seed(seed, i) for i in range(n_estimators)]
    trees = [fit_one(X, y, s, m, bootstrap, min_samples_leaf) for s in seeds]
    return {"trees": trees, "tree_seeds": seeds}


def votes(state: dict, X) -> np.ndarray:
    """Number of trees voting related, per row."""
    Xc = sp.csc_matrix(X, dtype=float)
    total = np.zeros(Xc.shape[0], dtype=np.int64)
    for t in state["trees"]:
        total += _tree.predict(t, Xc)
    return total


def score(state: dict, X) -> np.ndarray:
    return votes(state, X) / len(state["trees"])

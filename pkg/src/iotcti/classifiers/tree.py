"""CART-style binary decision tree on the Gini criterion.

Trees are stored as flat node arrays. A node with ``feature == -1`` is a
leaf; otherwise samples with ``x[feature] <= threshold`` go left.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

# Split candidates within this much of the best impurity count as ties.
TIE_TOL = 1e-12

_NODE_FIELDS = ("feature", "threshold", "left", "right", "n_samples", "n_related")


def gini(n, p):
    """Gini impurity of a node holding ``n`` samples of which ``p`` are related."""
    n = np.asarray(n, dtype=float)
    q = np.asarray(p, dtype=float) / n
    return 1.0 - q * q - (1.0 - q) * (1.0 - q)


def best_split(Xn: sp.csr_matrix, yn: np.ndarray, min_samples_leaf: int, feature_mask=None):
    """Best (feature, threshold, child_impurity) for one node, or None.

    ``Xn`` holds the node's rows only. Implicit zeros are folded in as one
    weighted entry per column so sparse columns are handled without
    densifying. Ties go to the lowest feature index, then lowest threshold.
    """
    n, d = Xn.shape
    p = int(yn.sum())
    coo = Xn.tocoo()
    cols, vals, lab = coo.col.astype(np.int64), coo.data, yn[coo.row].astype(np.int64)
    if feature_mask is not None:
        keep = feature_mask[cols]
        cols, vals, lab = cols[keep], vals[keep], lab[keep]
    if cols.size == 0:
        return None
    nnz = np.bincount(cols, minlength=d)
    npos = np.bincount(cols, weights=lab, minlength=d).astype(np.int64)
    present = np.flatnonzero(nnz)
    zero_n = n - nnz[present]
    zero_p = p - npos[present]
    has_zero = zero_n > 0

    c = np.concatenate([cols, present[has_zero]])
    v = np.concatenate([vals, np.zeros(int(has_zero.sum()))])
    w = np.concatenate([np.ones(cols.size, dtype=np.int64), zero_n[has_zero]])
    q = np.concatenate([lab, zero_p[has_zero]])
    order = np.lexsort((v, c))
    c, v, w, q = c[order], v[order], w[order], q[order]

    cw, cq = np.cumsum(w), np.cumsum(q)
    starts = np.flatnonzero(np.r_[True, c[1:] != c[:-1]])
    seg = np.cumsum(np.r_[True, c[1:] != c[:-1]]) - 1
    base_w = np.r_[0, cw][starts][seg]
    base_q = np.r_[0, cq][starts][seg]
    n_left = (cw - base_w)[:-1]
    p_left = (cq - base_q)[:-1]
    n_right = n - n_left
    valid = (
        (c[1:] == c[:-1])
        & (v[:-1] < v[1:])
        & (n_left >= min_samples_leaf)
        & (n_right >= min_samples_leaf)
    )
    if not valid.any():
        return None
    idx = np.flatnonzero(valid)
    nl, pl = n_left[idx], p_left[idx]
    nr, pr = n - nl, p - pl
    child = (nl * gini(nl, pl) + nr * gini(nr, pr)) / n
    best = child.min()
    # candidates are already ordered by (feature, threshold)
    k = idx[np.flatnonzero(child <= best + TIE_TOL)[0]]
    lo, hi = v[k], v[k + 1]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return int(c[k]), float(thr), float(best)


def build_tree(X, y: np.ndarray, min_samples_leaf: int = 5, max_features: int | None = None, rng=None) -> dict:
    """Grow a tree greedily until nodes are pure or too small to split.

    When ``max_features`` is below the feature count, each split examines a
    fresh subset of that many features drawn from ``rng`` without replacement.
    """
    X = sp.csr_matrix(X, dtype=float)
    X.eliminate_zeros()
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    subsample = max_features is not None and max_features < d
    nodes = {f: [] for f in _NODE_FIELDS}

    def new_node(rows):
        for f in _NODE_FIELDS:
            nodes[f].append(-1)
        nodes["threshold"][-1] = 0.0
        nodes["n_samples"][-1] = len(rows)
        nodes["n_related"][-1] = int(y[rows].sum())
        return len(nodes["feature"]) - 1

    stack = [(new_node(np.arange(n)), np.arange(n))]
    while stack:
        node, rows = stack.pop()
        n_node, p_node = nodes["n_samples"][node], nodes["n_related"][node]
        if p_node in (0, n_node) or n_node < 2 * min_samples_leaf:
            continue
        mask = None
        if subsample:
            mask = np.zeros(d, dtype=bool)
            mask[rng.choice(d, size=max_features, replace=False)] = True
        Xn = X[rows]
        found = best_split(Xn, y[rows], min_samples_leaf, mask)
        if found is None:
            continue
        feat, thr, _ = found
        col = Xn[:, feat].toarray().ravel()
        go_left = col <= thr
        left = new_node(rows[go_left])
        right = new_node(rows[~go_left])
        nodes["feature"][node], nodes["threshold"][node] = feat, thr
        nodes["left"][node], nodes["right"][node] = left, right
        stack.append((right, rows[~go_left]))
        stack.append((left, rows[go_left]))

    return {
        "feature": np.array(nodes["feature"], dtype=np.int64),
        "threshold": np.array(nodes["threshold"], dtype=float),
        "left": np.array(nodes["left"], dtype=np.int64),
        "right": np.array(nodes["right"], dtype=np.int64),
        "n_samples": np.array(nodes["n_samples"], dtype=np.int64),
        "n_related": np.array(nodes["n_related"], dtype=np.int64),
    }


def _column_values(Xc: sp.csc_matrix, feat: int, rows: np.ndarray) -> np.ndarray:
    lo, hi = Xc.indptr[feat], Xc.indptr[feat + 1]
    idx, dat = Xc.indices[lo:hi], Xc.data[lo:hi]
    out = np.zeros(len(rows))
    if idx.size:
        pos = np.searchsorted(idx, rows)
        pos_c = np.minimum(pos, idx.size - 1)
        hit = idx[pos_c] == rows
        out[hit] = dat[pos_c[hit]]
    return out


def apply(tree: dict, X) -> np.ndarray:
    """Leaf index reached by every row of ``X``."""
    Xc = sp.csc_matrix(X, dtype=float)
    Xc.sort_indices()
    out = np.empty(Xc.shape[0], dtype=np.int64)
    stack = [(0, np.arange(Xc.shape[0]))]
    feature, threshold = tree["feature"], tree["threshold"]
    while stack:
        node, rows = stack.pop()
        if rows.size == 0:
            continue
        f = feature[node]
        if f < 0:
            out[rows] = node
            continue
        go_left = _column_values(Xc, f, rows) <= threshold[node]
        stack.append((tree["left"][node], rows[go_left]))
        stack.append((tree["right"][node], rows[~go_left]))
    return out


def leaf_fraction(tree: dict, X) -> np.ndarray:
    """Fraction of related training samples in the leaf each row lands in."""
    leaves = apply(tree, X)
    return tree["n_related"][leaves] / tree["n_samples"][leaves]


def predict(tree: dict, X) -> np.ndarray:
    """Leaf-majority labels; an evenly split leaf votes unrelated."""
    leaves = apply(tree, X)
    return (2 * tree["n_related"][leaves] > tree["n_samples"][leaves]).astype(np.int64)


def fit(X, y: np.ndarray, min_samples_leaf: int = 5) -> dict:
    return {"tree": build_tree(X, y, min_samples_leaf)}


def score(state: dict, X) -> np.ndarray:
    return leaf_fraction(state["tree"], X)

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iotcti.classifiers import ModelSpec
from iotcti.model_select import (
    DEFAULT_GRIDS,
    DegenerateFoldError,
    GridCellError,
    cross_val_predictions,
    cross_validate,
    expand_grid,
    grid_search,
    kfold_indices,
    load_grid,
)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 20).flatmap(lambda k: st.tuples(st.just(k), st.integers(k, 300))), st.integers(0, 2**31))
def test_folds_partition(kn, seed):
    k, n = kn
    plan = kfold_indices(n, k, seed)
    seen = np.concatenate([idx for _, idx in plan.folds()])
    assert sorted(seen.tolist()) == list(range(n))
    sizes = [len(idx) for _, idx in plan.folds()]
    assert max(sizes) - min(sizes) <= 1


def test_singleton_folds():
    plan = kfold_indices(10, 10, seed=0)
    folds = [idx.tolist() for _, idx in plan.folds()]
    assert all(len(f) == 1 for f in folds)
    assert sorted(f[0] for f in folds) == list(range(10))


def test_fold_determinism():
    a, b = kfold_indices(97, 10, seed=5), kfold_indices(97, 10, seed=5)
    np.testing.assert_array_equal(a.assignments, b.assignments)
    assert not np.array_equal(a.assignments, kfold_indices(97, 10, seed=6).assignments)


def test_arity_errors():
    with pytest.raises(ValueError):
        kfold_indices(5, 10)
    with pytest.raises(ValueError):
        kfold_indices(5, 1)


def test_stratified_folds_balance():
    y = np.array([1] * 40 + [0] * 40)
    plan = kfold_indices(80, 10, seed=1, y=y, stratify=True)
    for _, idx in plan.folds():
        assert y[idx].sum() == 4 and len(idx) == 8


def separable(n=60, seed=0):
    rng = np.random.default_rng(seed)
    y = np.array([1, 0] * (n // 2))
    X = np.zeros((n, 4))
    X[y == 1, 0] = 1 + rng.random(int(y.sum()))
    X[y == 0, 1] = 1 + rng.random(n - int(y.sum()))
    return X, y


def test_memorizing_model_perfect():
    X, y = separable()
    rep = cross_validate(ModelSpec("knn", {"n_neighbors": 1}), X, y, kfold_indices(60, 10, 3))
    assert rep.accuracy == 1.0 and rep.f1 == 1.0


def test_constant_baseline_half():
    # a feature column that never varies leaves only the (balanced) prior
    y = np.array([1, 0] * 20)
    X = np.zeros((40, 1))
    plan = kfold_indices(40, 10, seed=2, y=y, stratify=True)
    for kind in ("multinomial_nb", "logreg", "dtree"):
        rep = cross_validate(ModelSpec(kind), X, y, plan)
        assert rep.accuracy == pytest.approx(0.5, abs=1e-12)


def test_mean_accuracy_matches_retally(planted):
    _, _, X, y = planted
    plan = kfold_indices(len(y), 10, seed=4)
    spec = ModelSpec("dtree")
    folds = cross_val_predictions(spec, X, y, plan)
    per_fold = []
    for idx, pred in folds:
        hits = 0
        for i, p in zip(idx.tolist(), pred.tolist()):
            hits += int(p == y[i])
        per_fold.append(hits / len(idx))
    rep = cross_validate(spec, X, y, plan)
    assert rep.accuracy == pytest.approx(sum(per_fold) / len(per_fold), abs=1e-12)
    covered = np.concatenate([idx for idx, _ in folds])
    assert sorted(covered.tolist()) == list(range(len(y)))


def test_degenerate_fold():
    y = np.array([1] + [0] * 9)
    with pytest.raises(DegenerateFoldError) as err:
        cross_validate(ModelSpec("logreg"), np.eye(10), y, kfold_indices(10, 10, seed=0))
    assert y[kfold_indices(10, 10, 0).assignments == err.value.fold].tolist() == [1]


def test_grid_single_spec():
    X, y = separable()
    spec = ModelSpec("logreg")
    res = grid_search([spec], X, y, kfold_indices(60, 5, 0))
    assert res.best == spec and res.best_index == 0


def test_grid_capable_beats_weak():
    X, y = separable()
    plan = kfold_indices(60, 5, 0, y=y, stratify=True)
    weak = ModelSpec("dtree", {"min_samples_leaf": 100})  # never splits
    strong = ModelSpec("knn", {"n_neighbors": 1})
    res = grid_search([weak, strong], X, y, plan)
    assert res.best == strong
    # weak cell by hand: every fold holds 6 of each class and gets all "unrelated",
    # so related F1 = 0 and unrelated F1 = 2*0.5*1/(0.5+1) = 2/3
    assert res.table[0][1].f1 == pytest.approx(1 / 3, abs=1e-12)
    assert res.table[1][1].f1 == 1.0


def test_grid_tie_goes_to_earlier():
    X, y = separable()
    a, b = ModelSpec("knn", {"n_neighbors": 3}), ModelSpec("knn", {"n_neighbors": 1})
    plan = kfold_indices(60, 5, 0)
    assert grid_search([a, b], X, y, plan).best == a
    assert grid_search([b, a], X, y, plan).best == b


def test_grid_permutation_invariant_value(planted):
    _, _, X, y = planted
    X, y = X[:150], y[:150]
    grid = expand_grid({k: DEFAULT_GRIDS[k] for k in ("dtree", "knn", "multinomial_nb")})
    plan = kfold_indices(150, 5, 1)
    res = grid_search(grid, X, y, plan)
    rng = np.random.default_rng(0)
    for _ in range(2):
        perm = [grid[i] for i in rng.permutation(len(grid))]
        other = grid_search(perm, X, y, plan)
        assert other.table[other.best_index][1].f1 == res.table[res.best_index][1].f1


def test_grid_errors_name_spec():
    y = np.array([1] + [0] * 9)
    spec = ModelSpec("logreg")
    with pytest.raises(GridCellError) as err:
        grid_search([spec], np.eye(10), y, kfold_indices(10, 10, 0))
    assert err.value.spec == spec
    with pytest.raises(ValueError):
        grid_search([], np.eye(10), y, kfold_indices(10, 10, 0))


def test_grid_file_and_csv(tmp_path):
    p = tmp_path / "grid.json"
    p.write_text(json.dumps({"knn": {"n_neighbors": [1, 3]}, "logreg": {"C": [1.0]}}), encoding="utf-8")
    grid = load_grid(p)
    assert [s.label() for s in grid] == ["knn(n_neighbors=1)", "knn(n_neighbors=3)", "logreg(C=1.0,max_iter=100,tol=1e-06)"]
    X, y = separable()
    csv_text = grid_search(grid, X, y, kfold_indices(60, 5, 0)).to_csv()
    lines = csv_text.strip().split("\n")
    assert lines[0] == "kind,C,max_iter,n_neighbors,tol,f1,precision,recall,accuracy,best"
    assert len(lines) == 4 and sum(int(l.rsplit(",", 1)[1]) for l in lines[1:]) == 1


def test_default_grids_contain_reported_values():
    assert 10.0 in DEFAULT_GRIDS["logreg"]["C"]
    assert 0.1 in DEFAULT_GRIDS["multinomial_nb"]["alpha"]
    assert 5 in DEFAULT_GRIDS["dtree"]["min_samples_leaf"]
    assert 5 in DEFAULT_GRIDS["knn"]["n_neighbors"]
    assert 1.0 in DEFAULT_GRIDS["svm"]["C"]
    assert 300 in DEFAULT_GRIDS["rforest"]["n_estimators"]

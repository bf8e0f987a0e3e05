"""Train the six classifiers on a planted corpus and compare under 10-fold CV."""
import time

import numpy as np

from iotcti.classifiers import KINDS, ModelSpec, dumps_model, loads_model, predict_scores, train_model
from iotcti.features import fit_vocabulary, transform_many
from iotcti.model_select import cross_validate, grid_search, kfold_indices
from iotcti.synthetic import planted_corpus
from iotcti.textprep import preprocess

docs = planted_corpus(400, seed=1)
tokens = [preprocess(d.text) for d in docs]
vocab = fit_vocabulary(tokens)
X = transform_many(tokens, vocab)
y = np.array([d.label == "related" for d in docs], dtype=int)
plan = kfold_indices(len(y), k=10, seed=42)

for kind in KINDS:
    spec = ModelSpec(kind, {"n_estimators": 60} if kind == "rforest" else {})
    t0 = time.perf_counter()
    rep = cross_validate(spec, X, y, plan)
    print(f"{spec.label():<70} acc {rep.accuracy:.3f}  f1 {rep.f1:.3f}  {time.perf_counter() - t0:.1f}s")

# a small grid; ties keep the earlier spec
res = grid_search([ModelSpec("knn", {"n_neighbors": k}) for k in (1, 3, 5, 7)], X, y, plan)
print(res.to_csv())
print("best:", res.best.label())

m = train_model(ModelSpec("multinomial_nb"), X, y, vocab_fingerprint=vocab.fingerprint)
text = dumps_model(m)
print(len(text), "bytes of JSON")
print(np.array_equal(predict_scores(loads_model(text), X), predict_scores(m, X)))

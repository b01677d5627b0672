"""
Interpretable models on the Covid toy data
==========================================

Fit each model family, then read the model itself: weights, shape
functions, rules, a tree path and nearest cases.
"""

import numpy as np

from glassbox.data import generate_covid_toy, split
from glassbox.explain import complexity, explain_prediction, global_importance
from glassbox.models import encode_instances, fit_model, predict, predict_ids
from glassbox.worked_examples import KNN_QUERY, TREE_RECORD, knn_wrapped, tree_model

# 400 patients, two features, a binary label
data = generate_covid_toy(400, seed=0)
train, test = split(data, 0.7, seed=0)

# sparse logistic regression: the weights are the explanation
logit = fit_model("logistic", train, l1_weight=0.01)
for name, w in global_importance(logit).contributions:
    print(f"{name:>14s} {w:+.3f}")

# additive model: one shape function per feature, summarized by mean |f_i|
gam = fit_model("gam", train, bins=8)
print(global_importance(gam).contributions)

# every family, held-out accuracy next to its complexity
for family, hp in [("logistic", {}), ("gam", {"bins": 8}), ("rules", {"max_premises": 2}),
                   ("tree", {"max_depth": 3}), ("knn", {"k": 5})]:
    m = fit_model(family, train, **hp)
    acc = np.mean(predict_ids(m, encode_instances(m, test)) == test.label_ids()[0])
    print(f"{family:8s} accuracy {acc:.3f}  complexity {complexity(m).global_}")

# a learned rule set reads as a list of if-then statements
rules = fit_model("rules", train, max_premises=2)
for r in rules.estimator.rules:
    print(r.describe(rules.feature_names, rules.classes))

# the depth-3 tree from the running example: the path is the explanation
t = tree_model()
e = explain_prediction(t, TREE_RECORD)
print(" and ".join(c.describe(t.feature_names) for c in e.paths[0]), "->", e.label)
print("path length", complexity(t, TREE_RECORD).local, "of depth", complexity(t).global_)

# k-NN explains by showing the memory it voted with
knn = knn_wrapped(k=5)
cases = explain_prediction(knn, KNN_QUERY)
for c in cases.cases:
    print(c.index, c.instance, c.label, round(c.distance, 3))
print(predict(knn, KNN_QUERY).label, cases.tally)

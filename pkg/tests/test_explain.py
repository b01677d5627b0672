import numpy as np
import pytest

from glassbox.data import generate_covid_toy
from glassbox.explain import (CaseExplanation, RuleExplanation, UnsupportedExplanationError, complexity,
                              explain_prediction, global_importance, local_importance)
from glassbox.models import LinearModel, Model, RuleSet, Rule, Condition, encode_instances, fit_model, predict
from glassbox.data import BINARY, COVID_CLASSES, COVID_FEATURES
from glassbox.worked_examples import (KNN_QUERY, RULE_RECORD, TREE_RECORD, knn_wrapped, rule_model,
                                      tree_model)


def _linear(theta, theta0=0.0, link="logistic"):
    names = tuple(f"x{i + 1}" for i in range(len(theta)))
    return Model("logistic", LinearModel(theta0, np.array(theta, float), link), names, BINARY, COVID_CLASSES, {})


def test_linear_complexity_counts():
    r = complexity(_linear([0.0, 2.0, 0.0, -1.0]))
    assert r.global_ == 2 and r.detail["zero_weights"] == 2 and r.detail["l1_norm"] == 3.0


def test_zero_vector_contributions():
    a = local_importance(_linear([1.0, -2.0], 0.5), [0.0, 0.0])
    assert list(a.values) == [0.0, 0.0] and a.total == 0.5


def test_global_importance_is_weights():
    g = global_importance(_linear([1.5, -2.0]))
    assert g.names == ["x1", "x2"] and list(g.values) == [1.5, -2.0]


def test_worked_tree_path_explanation():
    e = explain_prediction(tree_model(), TREE_RECORD)
    assert isinstance(e, RuleExplanation) and e.label == "NoCovid"
    assert [c.describe(COVID_FEATURES) for c in e.paths[0]] == ["COLevel ≤ 0.324", "LungCapacity ≤ -1.02"]
    c = complexity(tree_model(), TREE_RECORD)
    assert c.local == 2 and c.global_ == 3 and c.local <= c.global_


def test_worked_rule_explanation():
    e = explain_prediction(rule_model(), RULE_RECORD)
    assert e.label == "Covid" and e.covering == 1 and not e.default
    e0 = explain_prediction(rule_model(), (0.0, 0.0))
    assert e0.default and e0.label == "NoCovid" and e0.paths == ()


def test_knn_explanation_and_complexity():
    e = explain_prediction(knn_wrapped(), KNN_QUERY)
    assert isinstance(e, CaseExplanation) and len(e.cases) == 5
    assert e.tally == {"NoCovid": 4, "Covid": 1} and e.label == "NoCovid"
    c = complexity(knn_wrapped())
    assert (c.local, c.global_) == (5, 5)


def test_attribution_rejected_for_rule_families():
    with pytest.raises(UnsupportedExplanationError):
        global_importance(tree_model())


def test_adding_rule_never_decreases_complexity():
    base = rule_model()
    more = RuleSet(base.estimator.rules + (Rule((Condition(1, ">", 0.0), Condition(0, "<=", 9.0)), 1),), 0, 2)
    bigger = Model("rules", more, COVID_FEATURES, BINARY, COVID_CLASSES, {})
    assert complexity(bigger).global_ >= complexity(base).global_


@pytest.mark.parametrize("family,hp", [("logistic", {}), ("gam", {"bins": 8})])
def test_local_attribution_faithful(family, hp):
    d = generate_covid_toy(200, 1)
    m = fit_model(family, d, **hp)
    X = encode_instances(m, d)
    score = m.estimator.score(X)
    for x, s in zip(X[:50], score[:50]):
        assert local_importance(m, x).total == pytest.approx(s, abs=1e-9)


def test_explanation_label_matches_prediction():
    d = generate_covid_toy(150, 2)
    for fam in ("rules", "tree", "knn"):
        m = fit_model(fam, d)
        for x in encode_instances(m, d)[:30]:
            assert explain_prediction(m, x).label == predict(m, x).label

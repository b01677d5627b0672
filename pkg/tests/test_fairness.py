import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from glassbox.fairness import (UndefinedMetricError, audit_fairness, conditional_statistical_disparity,
                               error_rate_gaps, grouped_confusion, predictive_value_gaps, statistical_disparity,
                               verify_fairness)
from oracles import fairness_oracle

binary = st.lists(st.integers(0, 1), min_size=1, max_size=60)


def test_statistical_disparity_example():
    assert statistical_disparity([1, 1, 0, 0], [1, 1, 0, 0]) == 1.0
    assert statistical_disparity([1, 0, 1, 0], [1, 1, 0, 0]) == 0.0


def test_undefined_metric_has_reason():
    with pytest.raises(UndefinedMetricError, match="reference group"):
        statistical_disparity([1, 0], [1, 1])
    tpr, fpr = error_rate_gaps([0, 0, 0, 0], [1, 0, 1, 0], [0, 0, 1, 1])
    assert tpr is None and fpr == 0.0


def test_confusion_counts():
    cm = grouped_confusion([1, 0, 1, 0], [1, 1, 0, 0], [1, 1, 0, 0])
    assert (cm.groups[1].tp, cm.groups[1].fp, cm.groups[0].fn, cm.groups[0].tn) == (1, 1, 1, 1)
    assert cm.n == 4


def test_csd_excludes_single_group_strata():
    c = conditional_statistical_disparity([1, 0, 1, 1, 0], [1, 0, 1, 0, 1], ["a", "a", "b", "b", "c"])
    assert c.excluded == ("c",) and c.max_abs == 1.0


def test_verify_boundaries():
    rep = audit_fairness([1, 0, 1, 0], [1, 1, 0, 0], [1, 1, 0, 0], metrics=["sd"])
    assert rep.delta == 1.0
    assert verify_fairness(rep, 1.0) and not verify_fairness(rep, 0.99)
    with pytest.raises(ValueError):
        verify_fairness(rep, -0.1)


def test_non_binary_rejected():
    with pytest.raises(ValueError):
        audit_fairness([0, 2], [0, 1], [0, 1])


@given(st.data())
def test_matches_counting_oracle(data):
    n = data.draw(st.integers(2, 80))
    arr = st.lists(st.integers(0, 1), min_size=n, max_size=n)
    y, yhat, s = data.draw(arr), data.draw(arr), data.draw(arr)
    r = data.draw(st.lists(st.integers(0, 2), min_size=n, max_size=n))
    expect = fairness_oracle(y, yhat, s, r)
    tpr, fpr = error_rate_gaps(y, yhat, s)
    ppv, npv = predictive_value_gaps(y, yhat, s)
    got = {"tpr": tpr, "fpr": fpr, "ppv": ppv, "npv": npv}
    try:
        got["sd"] = statistical_disparity(yhat, s)
    except UndefinedMetricError:
        got["sd"] = None
    try:
        got["csd"] = conditional_statistical_disparity(yhat, s, r).max_abs
    except UndefinedMetricError:
        got["csd"] = None
    for k, v in expect.items():
        assert (got[k] is None) == (v is None), k
        if v is not None:
            assert abs(got[k] - float(v)) <= 1e-12, k


@given(st.data())
def test_swap_groups_negates_gaps(data):
    n = data.draw(st.integers(4, 60))
    arr = st.lists(st.integers(0, 1), min_size=n, max_size=n)
    y, yhat, s = np.array(data.draw(arr)), np.array(data.draw(arr)), np.array(data.draw(arr))
    try:
        a = audit_fairness(y, yhat, s)
    except UndefinedMetricError:
        return
    b = audit_fairness(y, yhat, 1 - s)
    for k, v in a.gaps().items():
        if v is not None:
            assert b.gaps()[k] == pytest.approx(-v, abs=1e-15)
    assert b.delta == pytest.approx(a.delta, abs=1e-15)


@given(st.data())
def test_constant_prediction_zero_delta(data):
    n = data.draw(st.integers(2, 60))
    arr = st.lists(st.integers(0, 1), min_size=n, max_size=n)
    y, s = data.draw(arr), data.draw(arr)
    c = data.draw(st.integers(0, 1))
    if len(set(s)) < 2:
        return
    yhat = [c] * n
    # metrics that ignore y: sd, and tpr/fpr (the predicted rate is c in every group)
    rep = audit_fairness(y, yhat, s, metrics=["sd", "tpr", "fpr"])
    assert rep.delta == 0.0


def test_permutation_null():
    rng = np.random.default_rng(0)
    s = np.repeat([0, 1], 100)
    yhat = (rng.random(200) < 0.4).astype(int)
    vals = [abs(statistical_disparity(rng.permutation(yhat), s)) for _ in range(200)]
    assert np.mean(vals) < 0.15

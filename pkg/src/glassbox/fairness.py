"""Group-fairness metrics for a binary sensitive attribute (``s = 1`` is the protected group).

Every metric is a difference of empirical rates, protected group minus the
rest. A rate whose denominator is zero is never coerced to 0 or 1: the metric
is reported as undefined together with the reason.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

METRICS = ("sd", "csd", "tpr", "fpr", "ppv", "npv")


class UndefinedMetricError(ValueError):
    """A metric's denominator is zero for some group."""


def _binary(name, v):
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isin(v, (0, 1))):
        raise ValueError(f"{name} must be binary 0/1")
    return v.astype(int)


def _check(*named):
    arrays = [_binary(n, v) for n, v in named]
    if len({len(a) for a in arrays}) > 1:
        raise ValueError("inputs have different lengths")
    return arrays


@dataclass(frozen=True)
class GroupCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def size(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def predicted_positive(self) -> int:
        return self.tp + self.fp


@dataclass(frozen=True)
class GroupedConfusion:
    """Confusion counts per sensitive value; ``groups[1]`` is the protected group."""

    groups: tuple

    @property
    def n(self) -> int:
        return sum(g.size for g in self.groups)


def grouped_confusion(y, yhat, s) -> GroupedConfusion:
    y, yhat, s = _check(("y", y), ("yhat", yhat), ("s", s))
    out = []
    for g in (0, 1):
        m = s == g
        yy, pp = y[m], yhat[m]
        out.append(GroupCounts(int(np.sum((yy == 1) & (pp == 1))), int(np.sum((yy == 0) & (pp == 1))),
                               int(np.sum((yy == 0) & (pp == 0))), int(np.sum((yy == 1) & (pp == 0)))))
    return GroupedConfusion(tuple(out))


def _rate_gap(num1, den1, num0, den0, what):
    """``num1/den1 - num0/den0`` or ``(None, reason)`` when a denominator is zero."""
    if den1 == 0:
        return None, f"no {what} in the protected group (s=1)"
    if den0 == 0:
        return None, f"no {what} in the reference group (s=0)"
    return num1 / den1 - num0 / den0, None


def statistical_disparity(yhat, s) -> float:
    """``P[yhat=1 | s=1] - P[yhat=1 | s=0]``."""
    yhat, s = _check(("yhat", yhat), ("s", s))
    n1, n0 = int(np.sum(s == 1)), int(np.sum(s == 0))
    gap, reason = _rate_gap(int(np.sum(yhat[s == 1])), n1, int(np.sum(yhat[s == 0])), n0, "members")
    if gap is None:
        raise UndefinedMetricError(f"statistical disparity undefined: {reason}")
    return gap


@dataclass(frozen=True)
class ConditionalDisparity:
    """Per-stratum disparities plus the (max absolute, size-weighted mean) aggregate."""

    strata: tuple
    max_abs: float
    weighted_mean: float
    excluded: tuple = ()

    @property
    def aggregate(self) -> tuple:
        return self.max_abs, self.weighted_mean


def conditional_statistical_disparity(yhat, s, r) -> ConditionalDisparity:
    """Statistical disparity within each stratum of the resolving feature ``r``.

    Strata lacking one of the two groups are excluded and listed.
    """
    yhat, s = _check(("yhat", yhat), ("s", s))
    r = np.asarray(r)
    if r.shape != yhat.shape:
        raise ValueError("r must have one value per row")
    strata, excluded, sizes = [], [], []
    keys = sorted(set(r.tolist()), key=lambda v: (str(type(v)), v))
    for key in keys:
        m = r == key
        n1, n0 = int(np.sum(s[m] == 1)), int(np.sum(s[m] == 0))
        gap, _ = _rate_gap(int(np.sum(yhat[m & (s == 1)])), n1, int(np.sum(yhat[m & (s == 0)])), n0, "members")
        if gap is None:
            excluded.append(key)
            continue
        strata.append((key, gap))
        sizes.append(n1 + n0)
    if not strata:
        raise UndefinedMetricError("conditional statistical disparity undefined: no stratum has both groups")
    vals = np.array([v for _, v in strata])
    w = np.array(sizes, dtype=float)
    return ConditionalDisparity(tuple(strata), float(np.max(np.abs(vals))),
                                float((vals * w).sum() / w.sum()), tuple(excluded))


def _gap_pair(cm: GroupedConfusion, which: str):
    g0, g1 = cm.groups
    if which == "tpr":
        return _rate_gap(g1.tp, g1.tp + g1.fn, g0.tp, g0.tp + g0.fn, "actual positives")
    if which == "fpr":
        return _rate_gap(g1.fp, g1.fp + g1.tn, g0.fp, g0.fp + g0.tn, "actual negatives")
    if which == "ppv":
        return _rate_gap(g1.tp, g1.tp + g1.fp, g0.tp, g0.tp + g0.fp, "predicted positives")
    return _rate_gap(g1.tn, g1.tn + g1.fn, g0.tn, g0.tn + g0.fn, "predicted negatives")


def error_rate_gaps(y, yhat, s) -> tuple:
    """``(tpr_gap, fpr_gap)``; an undefined component is ``None``.

    The TPR gap is also the equal-opportunity gap and the FPR gap the
    predictive-equality gap.
    """
    cm = grouped_confusion(y, yhat, s)
    return _gap_pair(cm, "tpr")[0], _gap_pair(cm, "fpr")[0]


def predictive_value_gaps(y, yhat, s) -> tuple:
    """``(ppv_gap, npv_gap)``; an undefined component is ``None``."""
    cm = grouped_confusion(y, yhat, s)
    return _gap_pair(cm, "ppv")[0], _gap_pair(cm, "npv")[0]


@dataclass(frozen=True)
class FairnessReport:
    sd: float | None
    csd: ConditionalDisparity | None
    eo_tpr_gap: float | None
    eo_fpr_gap: float | None
    cua_ppv_gap: float | None
    cua_npv_gap: float | None
    delta: float
    metrics: tuple = METRICS
    undefined: tuple = ()
    confusion: GroupedConfusion | None = field(default=None, compare=False)

    @property
    def equal_opportunity_gap(self):
        return self.eo_tpr_gap

    @property
    def predictive_equality_gap(self):
        return self.eo_fpr_gap

    def gaps(self) -> dict:
        """Signed value of each selected metric (``None`` if undefined); CSD enters by max-abs."""
        vals = {"sd": self.sd, "csd": None if self.csd is None else self.csd.max_abs,
                "tpr": self.eo_tpr_gap, "fpr": self.eo_fpr_gap, "ppv": self.cua_ppv_gap, "npv": self.cua_npv_gap}
        return {k: vals[k] for k in self.metrics}

    def to_dict(self) -> dict:
        d = {"sd": self.sd, "equal_opportunity_gap": self.eo_tpr_gap, "predictive_equality_gap": self.eo_fpr_gap,
             "eo_tpr_gap": self.eo_tpr_gap, "eo_fpr_gap": self.eo_fpr_gap, "cua_ppv_gap": self.cua_ppv_gap,
             "cua_npv_gap": self.cua_npv_gap, "delta": self.delta, "metrics": list(self.metrics),
             "undefined": [list(u) for u in self.undefined], "csd": None}
        if self.csd is not None:
            d["csd"] = {"strata": [[str(k), v] for k, v in self.csd.strata], "max_abs": self.csd.max_abs,
                        "weighted_mean": self.csd.weighted_mean, "excluded": [str(k) for k in self.csd.excluded]}
        if self.confusion is not None:
            d["confusion"] = {str(g): {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn}
                              for g, c in enumerate(self.confusion.groups)}
        return d


def audit_fairness(y, yhat, s, r=None, metrics=None) -> FairnessReport:
    """Compute every group metric and ``delta``, the largest absolute defined gap
    among ``metrics`` (default: all; ``csd`` only counts when ``r`` is given)."""
    y, yhat, s = _check(("y", y), ("yhat", yhat), ("s", s))
    selected = tuple(METRICS if metrics is None else metrics)
    unknown = set(selected) - set(METRICS)
    if unknown:
        raise ValueError(f"unknown fairness metrics {sorted(unknown)}")
    if r is None:
        selected = tuple(m for m in selected if m != "csd")
    undefined = []
    cm = grouped_confusion(y, yhat, s)
    try:
        sd = statistical_disparity(yhat, s)
    except UndefinedMetricError as exc:
        sd = None
        undefined.append(("sd", str(exc)))
    csd = None
    if r is not None:
        try:
            csd = conditional_statistical_disparity(yhat, s, r)
        except UndefinedMetricError as exc:
            undefined.append(("csd", str(exc)))
    gaps = {}
    for name in ("tpr", "fpr", "ppv", "npv"):
        gaps[name], reason = _gap_pair(cm, name)
        if reason is not None:
            undefined.append((name, reason))
    report = FairnessReport(sd, csd, gaps["tpr"], gaps["fpr"], gaps["ppv"], gaps["npv"], 0.0, selected,
                            tuple(u for u in undefined if u[0] in selected), cm)
    defined = [abs(v) for v in report.gaps().values() if v is not None]
    if not defined:
        raise UndefinedMetricError("no selected fairness metric is defined on this data")
    return FairnessReport(sd, csd, gaps["tpr"], gaps["fpr"], gaps["ppv"], gaps["npv"], max(defined), selected,
                          report.undefined, cm)


def verify_fairness(report: FairnessReport, tau: float) -> bool:
    """``delta <= tau`` (closed bound)."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return report.delta <= tau

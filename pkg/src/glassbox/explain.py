"""Interpretation payloads and two-level complexity measures for every model family."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models.base import Model, predict
from .models.rules import Condition, rule_covers
from .models.tree import decision_path


class UnsupportedExplanationError(ValueError):
    """The requested explanation does not exist for this model family."""


@dataclass(frozen=True)
class FeatureAttribution:
    """Named per-feature contributions. For ``scope="local"`` on a linear or
    GAM model, ``intercept + sum(values)`` is the pre-link score; under a
    logistic link that score is a logit."""

    contributions: tuple
    scope: str
    intercept: float = 0.0
    link: str = "identity"

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.contributions]

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.contributions], dtype=float)

    @property
    def total(self) -> float:
        return self.intercept + float(sum(v for _, v in self.contributions))

    def to_dict(self) -> dict:
        return {"kind": "attribution", "scope": self.scope, "link": self.link, "intercept": self.intercept,
                "contributions": [[n, v] for n, v in self.contributions]}


@dataclass(frozen=True)
class RuleExplanation:
    """Active rules (rule sets) or the root-to-leaf path (trees).

    ``paths`` holds one tuple of conditions per active rule; a tree has exactly
    one. An empty ``paths`` with ``default=True`` means no rule covered the
    instance and the default label was returned.
    """

    paths: tuple
    label: str
    label_id: int
    covering: int
    feature_names: tuple
    default: bool = False
    source: str = "rules"

    def describe(self) -> list[str]:
        if self.default:
            return [f"default -> {self.label}"]
        return [" and ".join(c.describe(self.feature_names) for c in p) + f" -> {self.label}"
                for p in self.paths]

    def to_dict(self) -> dict:
        return {"kind": "rules", "source": self.source, "label": self.label, "default": self.default,
                "covering": self.covering,
                "paths": [[[self.feature_names[c.feature], c.op, c.value] for c in p] for p in self.paths]}


@dataclass(frozen=True)
class Case:
    index: int
    instance: tuple
    label: str
    distance: float


@dataclass(frozen=True)
class CaseExplanation:
    cases: tuple
    tally: dict
    label: str
    label_id: int
    metric: str = "euclidean"

    def to_dict(self) -> dict:
        return {"kind": "cases", "label": self.label, "metric": self.metric, "tally": dict(self.tally),
                "cases": [{"index": c.index, "instance": list(c.instance), "label": c.label,
                           "distance": c.distance} for c in self.cases]}


@dataclass(frozen=True)
class ComplexityReport:
    """``local`` is the cost of one prediction (the worst-case ``bound`` when no
    instance is given); ``global_`` is the whole-model cost."""

    local: float
    global_: float
    bound: float
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"local": self.local, "global": self.global_, "bound": self.bound, "detail": dict(self.detail)}


def _feature_family(model: Model):
    if model.family not in ("logistic", "linear", "gam"):
        raise UnsupportedExplanationError(
            f"{model.family} models are explained by rules or cases, not feature attributions")


def _term_names(model: Model) -> list[str]:
    e, names = model.estimator, model.feature_names
    return [names[s.feature] for s in e.shapes] + [f"{names[i]} x {names[j]}" for i, j in
                                                   (s.features for s in e.interactions)]


def global_importance(model: Model) -> FeatureAttribution:
    """Weights for linear models; training-mass-weighted mean ``|shape|`` for GAMs."""
    _feature_family(model)
    e = model.estimator
    if model.family == "gam":
        vals = []
        for s in tuple(e.shapes) + tuple(e.interactions):
            mass = s.counts.sum()
            vals.append(float((np.abs(s.values) * s.counts).sum() / mass) if mass > 0 else 0.0)
        return FeatureAttribution(tuple(zip(_term_names(model), vals)), "global", e.theta0, e.link)
    return FeatureAttribution(tuple(zip(model.feature_names, (float(v) for v in e.theta))), "global",
                              e.theta0, e.link)


def local_importance(model: Model, x) -> FeatureAttribution:
    """Per-feature contributions ``theta_i * x_i`` (linear) or shape values ``f_i(x_i)`` (GAM)."""
    _feature_family(model)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != model.m:
        raise ValueError(f"instance has {x.shape[0]} features, model expects {model.m}")
    e = model.estimator
    if model.family == "gam":
        vals = e.terms(x[None, :])[0]
        return FeatureAttribution(tuple(zip(_term_names(model), (float(v) for v in vals))), "local",
                                  e.theta0, e.link)
    return FeatureAttribution(tuple(zip(model.feature_names, (float(v) for v in e.theta * x))), "local",
                              e.theta0, e.link)


def _tree_path_conditions(tree, x) -> tuple:
    path = decision_path(tree, x)
    conds = []
    for a, b in zip(path[:-1], path[1:]):
        nd = tree.nodes[a]
        conds.append(Condition(nd.feature, "<=" if b == nd.left else ">", nd.threshold))
    return tuple(conds)


def explain_prediction(model: Model, x):
    """Family-specific explanation whose label always equals ``predict(model, x).label``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    pred = predict(model, x)
    e = model.estimator
    if model.family in ("logistic", "linear", "gam"):
        return local_importance(model, x)
    if model.family == "tree":
        return RuleExplanation((_tree_path_conditions(e, x),), pred.label, pred.label_id, 1,
                               model.feature_names, False, "tree")
    if model.family == "rules":
        active = [r for r in e.rules if rule_covers(r, x)]
        return RuleExplanation(tuple(r.premises for r in active), pred.label, pred.label_id, len(active),
                               model.feature_names, not active, "rules")
    nbrs = e.neighbors(x)
    tally = {c: int(v) for c, v in zip(model.classes, e.tally(nbrs))}
    cases = tuple(Case(nb.index, nb.instance, model.classes[nb.label], nb.distance) for nb in nbrs)
    return CaseExplanation(cases, tally, pred.label, pred.label_id, e.metric)


def complexity(model: Model, x=None) -> ComplexityReport:
    """Local and global complexity.

    linear/GAM: nonzero weights or active terms; rules: ``|rules|`` globally and
    the longest covering rule locally; tree: depth and path length; k-NN:
    memory size and k.
    """
    e = model.estimator
    if x is not None:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != model.m:
            raise ValueError(f"instance has {x.shape[0]} features, model expects {model.m}")
    if model.family in ("logistic", "linear"):
        theta = e.theta
        nz = int(np.count_nonzero(theta))
        detail = {"nonzero_weights": nz, "zero_weights": int(len(theta) - nz),
                  "l1_norm": float(np.abs(theta).sum()), "l2_norm": float(np.linalg.norm(theta))}
        local = nz if x is None else int(np.count_nonzero(theta * x))
        return ComplexityReport(local, nz, nz, detail)
    if model.family == "gam":
        shapes = tuple(e.shapes) + tuple(e.interactions)
        active = int(sum(np.any(s.values != 0) for s in shapes))
        detail = {"terms": len(shapes), "active_terms": active, "interaction_terms": len(e.interactions),
                  "bins": int(sum(s.values.size for s in shapes))}
        local = active if x is None else int(np.count_nonzero(e.terms(x[None, :])[0]))
        return ComplexityReport(local, active, active, detail)
    if model.family == "rules":
        lens = [len(r.premises) for r in e.rules]
        bound = max(lens, default=0)
        detail = {"rules": len(lens), "total_premises": int(sum(lens)), "max_premises": bound}
        if x is None:
            local = bound
        else:
            local = max((len(r.premises) for r in e.rules if rule_covers(r, x)), default=0)
        return ComplexityReport(local, len(lens), bound, detail)
    if model.family == "tree":
        detail = {"depth": e.depth, "nodes": len(e.nodes), "leaves": e.n_leaves}
        local = e.depth if x is None else len(decision_path(e, x)) - 1
        return ComplexityReport(local, e.depth, e.depth, detail)
    detail = {"k": e.k, "memory": len(e.memory_X)}
    return ComplexityReport(e.k, len(e.memory_X), e.k, detail)

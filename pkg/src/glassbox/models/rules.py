"""Rule sets learned by precision-greedy sequential covering."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPS = ("<=", ">", "==")
_OP_TEXT = {"<=": "≤", ">": ">", "==": "="}


@dataclass(frozen=True)
class Condition:
    feature: int
    op: str
    value: float

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown operator {self.op!r}")
        v = float(self.value)
        if not np.isfinite(v):
            raise ValueError("condition thresholds must be finite")
        object.__setattr__(self, "feature", int(self.feature))
        object.__setattr__(self, "value", v)

    def mask(self, X) -> np.ndarray:
        col = np.asarray(X, dtype=float)[:, self.feature]
        if self.op == "<=":
            return col <= self.value
        if self.op == ">":
            return col > self.value
        return col == self.value

    def holds(self, x) -> bool:
        v = float(np.asarray(x, dtype=float).reshape(-1)[self.feature])
        if self.op == "<=":
            return v <= self.value
        if self.op == ">":
            return v > self.value
        return v == self.value

    def describe(self, feature_names=None) -> str:
        name = feature_names[self.feature] if feature_names is not None else f"x{self.feature + 1}"
        return f"{name} {_OP_TEXT[self.op]} {self.value:g}"


@dataclass(frozen=True)
class Rule:
    premises: tuple
    label: int
    class_counts: tuple | None = None

    def __post_init__(self):
        prem = tuple(self.premises)
        if not prem:
            raise ValueError("a rule needs at least one premise")
        seen = set()
        for c in prem:
            if c.op in ("<=", ">"):
                key = (c.feature, c.op)
                if key in seen:
                    raise ValueError(f"feature {c.feature} has two {c.op!r} premises")
                seen.add(key)
        object.__setattr__(self, "premises", prem)
        object.__setattr__(self, "label", int(self.label))
        if self.class_counts is not None:
            object.__setattr__(self, "class_counts", tuple(int(v) for v in self.class_counts))

    def mask(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.ones(len(X), dtype=bool)
        for c in self.premises:
            out &= c.mask(X)
        return out

    def describe(self, feature_names=None, classes=None) -> str:
        lhs = " and ".join(c.describe(feature_names) for c in self.premises)
        rhs = classes[self.label] if classes is not None else self.label
        return f"if {lhs} -> {rhs}"


def rule_covers(rule: Rule, x) -> bool:
    return all(c.holds(x) for c in rule.premises)


def _vote(labels, n_classes: int, voting: str) -> int:
    labels = np.asarray(labels, dtype=int)
    if voting == "average":
        # nearest class id to the mean label; ties go to the lower id
        mean = labels.mean()
        return int(np.argmin(np.abs(np.arange(n_classes) - mean)))
    return int(np.argmax(np.bincount(labels, minlength=n_classes)))


@dataclass(frozen=True)
class RuleSet:
    rules: tuple
    default: int
    n_classes: int
    voting: str = "majority"
    default_counts: tuple | None = None

    def __post_init__(self):
        if self.voting not in ("majority", "average"):
            raise ValueError(f"unknown voting schema {self.voting!r}")
        if not 0 <= int(self.default) < self.n_classes:
            raise ValueError("default label is not a valid class id")
        for r in self.rules:
            if not 0 <= r.label < self.n_classes:
                raise ValueError(f"rule label {r.label} is not a valid class id")
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "default", int(self.default))

    def covering(self, x) -> list[int]:
        return [i for i, r in enumerate(self.rules) if rule_covers(r, x)]

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.rules:
            return np.full(len(X), self.default)
        cover = np.column_stack([r.mask(X) for r in self.rules])
        labels = np.array([r.label for r in self.rules])
        out = np.full(len(X), self.default)
        for i in np.flatnonzero(cover.any(axis=1)):
            out[i] = _vote(labels[cover[i]], self.n_classes, self.voting)
        return out

    def proba(self, X) -> np.ndarray:
        """Class frequencies of the training records under the covering rules."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        prior = np.asarray(self.default_counts if self.default_counts is not None
                           else np.eye(self.n_classes)[self.default], dtype=float)
        out = np.tile(prior / prior.sum(), (len(X), 1))
        if not self.rules:
            return out
        counts = np.array([r.class_counts if r.class_counts is not None
                           else np.eye(self.n_classes)[r.label] for r in self.rules], dtype=float)
        cover = np.column_stack([r.mask(X) for r in self.rules]).astype(float)
        agg = cover @ counts
        hit = agg.sum(axis=1) > 0
        out[hit] = agg[hit] / agg[hit].sum(axis=1, keepdims=True)
        return out


def predict_rules(rs: RuleSet, x) -> int:
    labels = [rs.rules[i].label for i in rs.covering(x)]
    if not labels:
        return rs.default
    return _vote(labels, rs.n_classes, rs.voting)


def _best_condition(X, pos, covered):
    """Best single premise over the covered rows: max precision, then coverage,
    then lowest feature index, then lowest threshold, then ``<=`` before ``>``."""
    best = None
    n_cov = int(covered.sum())
    n_pos = int((pos & covered).sum())
    for j in range(X.shape[1]):
        v = X[covered, j]
        p = pos[covered]
        order = np.argsort(v, kind="stable")
        v, p = v[order], p[order]
        cut = np.flatnonzero(v[:-1] < v[1:])
        if len(cut) == 0:
            continue
        thr = (v[cut] + v[cut + 1]) / 2
        cum_pos = np.cumsum(p)[cut]
        cum_n = cut + 1
        for op, cov, tp in (("<=", cum_n, cum_pos), (">", n_cov - cum_n, n_pos - cum_pos)):
            prec = tp / cov
            # lexsort keys: last is primary
            k = np.lexsort((thr, -cov, -prec))[0]
            cand = (-prec[k], -int(cov[k]), j, thr[k], 0 if op == "<=" else 1)
            if best is None or cand < best[0]:
                best = (cand, Condition(j, op, thr[k]), float(prec[k]))
    return best


def learn_rules(X, y, max_premises: int = 3, min_coverage: int = 1, n_classes: int | None = None,
                voting: str = "majority") -> RuleSet:
    """Sequential covering, one class at a time in ascending id order.

    For each class a rule is grown from the rows not yet covered by that
    class's rules, adding the premise with the highest precision until
    ``max_premises`` is reached, the rule is pure, or no premise improves the
    precision. A rule is kept when it covers at least ``min_coverage`` rows;
    covered rows are then removed. The class stops when no positives or no
    negatives remain, or the grown rule is rejected. Uncovered instances get
    the training majority class.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("X must be a non-empty 2-D matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    if y.dtype.kind == "f" and not np.all(y == np.round(y)):
        raise ValueError("learn_rules supports classification targets only")
    y = y.astype(int)
    if max_premises < 1:
        raise ValueError("max_premises must be >= 1")
    if min_coverage < 1:
        raise ValueError("min_coverage must be >= 1")
    n_classes = int(n_classes if n_classes is not None else y.max() + 1)
    totals = np.bincount(y, minlength=n_classes)
    default = int(np.argmax(totals))
    rules = []
    for c in range(n_classes):
        pos = y == c
        work = np.ones(len(y), dtype=bool)
        while (pos & work).any() and (~pos & work).any():
            covered = work.copy()
            premises: dict[tuple, Condition] = {}
            prec = (pos & covered).sum() / covered.sum()
            while len(premises) < max_premises and prec < 1.0:
                best = _best_condition(X, pos, covered)
                if best is None or best[2] <= prec:
                    break
                cond = best[1]
                # the new threshold is tighter than any same-direction premise: replace it
                premises[(cond.feature, cond.op)] = cond
                covered &= cond.mask(X)
                prec = best[2]
            if not premises or covered.sum() < min_coverage:
                break
            ordered = tuple(premises.values())
            mask = np.ones(len(y), dtype=bool)
            for cond in ordered:
                mask &= cond.mask(X)
            rules.append(Rule(ordered, c, tuple(np.bincount(y[mask], minlength=n_classes))))
            work &= ~covered
    return RuleSet(tuple(rules), default, n_classes, voting, tuple(int(v) for v in totals))

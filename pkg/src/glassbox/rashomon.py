"""Rashomon-set exploration over a finite hyperparameter grid.

Every candidate is fit and scored on a held-out split. The Rashomon set keeps
the candidates whose loss is within an additive ``epsilon`` of the best. Its
members can then be annotated with fairness, privacy and causal audits and
ranked lexicographically or by Pareto dominance.
"""
from __future__ import annotations

import itertools
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .causal import causal_consistency
from .data import Dataset, binary_sensitive
from .explain import complexity
from .fairness import UndefinedMetricError, audit_fairness
from .models.base import FAMILIES, Model, encode_instances, fit_model, predict_ids
from .privacy import membership_inference

CRITERIA = ("loss", "complexity", "delta", "pi")
# slack for float rounding in ``loss <= best + epsilon``
MARGIN_TOL = 1e-12


@dataclass(frozen=True)
class HypothesisSpaceSpec:
    """Per-family grids: ``{family: {hyperparameter: [values...]}}``."""

    grids: dict

    def __post_init__(self):
        for fam, grid in self.grids.items():
            if fam not in FAMILIES:
                raise ValueError(f"unknown model family {fam!r}")
            for k, vals in grid.items():
                if not isinstance(vals, (list, tuple)) or not vals:
                    raise ValueError(f"grid {fam}.{k} must be a non-empty list")

    def candidates(self) -> list[tuple[str, dict]]:
        """Families in canonical order, then the product of each grid with
        hyperparameter names sorted and values in listed order."""
        out = []
        for fam in (f for f in FAMILIES if f in self.grids):
            grid = self.grids[fam]
            keys = sorted(grid)
            for combo in itertools.product(*(grid[k] for k in keys)):
                out.append((fam, dict(zip(keys, combo))))
        return out

    @property
    def size(self) -> int:
        return len(self.candidates())

    def to_dict(self) -> dict:
        return {"families": {f: {k: list(v) for k, v in g.items()} for f, g in self.grids.items()}}


def space_from_dict(d: dict) -> HypothesisSpaceSpec:
    return HypothesisSpaceSpec({f: {k: list(v) for k, v in g.items()} for f, g in d["families"].items()})


def load_space(path) -> HypothesisSpaceSpec:
    return space_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def default_space() -> HypothesisSpaceSpec:
    """24 candidates across the five classification families."""
    return HypothesisSpaceSpec({
        "tree": {"max_depth": [1, 2, 3], "min_leaf": [1, 5]},
        "knn": {"k": [1, 5, 15], "metric": ["euclidean", "manhattan"]},
        "logistic": {"l1_weight": [0.0, 0.01], "l2_weight": [0.0, 0.1]},
        "rules": {"max_premises": [1, 2], "min_coverage": [1, 10]},
        "gam": {"bins": [4, 8, 16, 32]},
    })


@dataclass(frozen=True)
class ModelCard:
    model_id: int
    family: str
    hyperparams: dict
    loss: float | None = None
    train_loss: float | None = None
    complexity: float | None = None
    delta: float | None = None
    pi: float | None = None
    causal: bool | None = None
    audits: tuple = ()
    failed: bool = False
    error: str | None = None
    fit_seconds: float | None = field(default=None, compare=False)
    model: Model | None = field(default=None, compare=False, repr=False)

    def criterion(self, name: str) -> float:
        if name not in CRITERIA:
            raise ValueError(f"unknown criterion {name!r}")
        v = getattr(self, name)
        if v is None:
            raise ValueError(f"criterion {name!r} is not populated on model {self.model_id} (audit skipped?)")
        return float(v)

    def to_dict(self) -> dict:
        # wall time is left out so reports stay byte-reproducible
        return {"model_id": self.model_id, "family": self.family, "hyperparams": self.hyperparams,
                "loss": self.loss, "train_loss": self.train_loss, "complexity": self.complexity,
                "delta": self.delta, "pi": self.pi, "causal": self.causal, "audits": list(self.audits),
                "failed": self.failed, "error": self.error}


def _loss(model: Model, d: Dataset) -> float:
    X = encode_instances(model, d)
    if model.is_classifier:
        y = d.label_ids()[0]
        return float(np.mean(predict_ids(model, X) != y))
    return float(np.mean((predict_ids(model, X) - d.targets()) ** 2))


def _fit_card(i, fam, hp, train, eval_):
    t0 = time.perf_counter()
    try:
        model = fit_model(fam, train, **hp)
    except ValueError as exc:
        return ModelCard(i, fam, hp, failed=True, error=str(exc))
    secs = time.perf_counter() - t0
    return ModelCard(i, fam, hp, _loss(model, eval_), _loss(model, train), float(complexity(model).global_),
                     fit_seconds=secs, model=model)


def enumerate_and_fit(spec: HypothesisSpaceSpec, train: Dataset, eval_: Dataset, seed: int = 0,
                      jobs: int = 1) -> list[ModelCard]:
    """Fit every candidate and score its 0-1 loss (MSE for regression) on ``eval_``.

    The learners are deterministic, so ``seed`` only labels the run. Cards come
    back in enumeration order whatever ``jobs`` is; a candidate that cannot be
    fit yields a card with ``failed=True``.
    """
    cands = spec.candidates()
    if not cands:
        raise ValueError("the hypothesis space is empty")
    if eval_.n == 0:
        raise ValueError("evaluation data is empty")
    tasks = [(i, fam, hp) for i, (fam, hp) in enumerate(cands)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda t: _fit_card(*t, train, eval_), tasks))
    return [_fit_card(*t, train, eval_) for t in tasks]


@dataclass(frozen=True)
class RashomonSet:
    reference_loss: float
    epsilon: float
    members: tuple
    ratio: float
    space_size: int
    failed: tuple = ()
    loss_on: str = "eval"

    def to_dict(self) -> dict:
        return {"reference_loss": self.reference_loss, "epsilon": self.epsilon, "ratio": self.ratio,
                "space_size": self.space_size, "loss_on": self.loss_on,
                "members": [c.to_dict() for c in self.members], "failed": [c.to_dict() for c in self.failed]}


def rashomon_set(cards, epsilon: float, loss_on: str = "eval") -> RashomonSet:
    """Members: cards with ``loss <= min loss + epsilon``; ratio over the successfully fit cards.

    ``loss_on="train"`` uses training loss instead of held-out loss.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if loss_on not in ("eval", "train"):
        raise ValueError("loss_on must be 'eval' or 'train'")
    ok = [c for c in cards if not c.failed]
    if not ok:
        raise ValueError("no successfully fit candidates")
    key = (lambda c: c.loss) if loss_on == "eval" else (lambda c: c.train_loss)
    best = min(key(c) for c in ok)
    members = tuple(c for c in ok if key(c) <= best + epsilon + MARGIN_TOL)
    return RashomonSet(best, float(epsilon), members, len(members) / len(ok), len(ok),
                       tuple(c for c in cards if c.failed), loss_on)


def annotate_ethics(rs: RashomonSet, data: Dataset, sensitive: str | None = None, protected: str | None = None,
                    train: Dataset | None = None, shadows: int = 4, scm=None, target: str | None = None,
                    seed: int = 0, jobs: int = 1, fairness_metrics=None) -> RashomonSet:
    """Fill ``delta`` (fairness on ``data``), ``pi`` (membership inference with
    ``train`` as members and ``data`` as non-members) and ``causal`` for each
    member. Each audit runs only when its inputs are supplied; with none, cards
    are marked ``audits=("none",)``."""
    if sensitive is not None and sensitive not in data.schema.names:
        raise ValueError(f"fairness audit skipped: sensitive column {sensitive!r} not in the data")
    if (scm is None) != (target is None):
        raise ValueError("causal audit skipped: it needs both an SCM and a target variable")
    s = binary_sensitive(data, sensitive, protected) if sensitive is not None else None
    out = []
    for c in rs.members:
        upd, audits = {}, []
        if s is not None:
            X = encode_instances(c.model, data)
            yhat = predict_ids(c.model, X)
            try:
                upd["delta"] = audit_fairness(data.label_ids()[0], yhat, s, metrics=fairness_metrics).delta
                audits.append("fairness")
            except UndefinedMetricError:
                audits.append("fairness-undefined")
        if train is not None:
            try:
                upd["pi"] = membership_inference(c.model, train, data, shadows, seed, jobs).pi
                audits.append("privacy")
            except ValueError:
                audits.append("privacy-failed")
        if scm is not None:
            upd["causal"] = causal_consistency(c.model, scm, target, seed=seed)[0]
            audits.append("causal")
        out.append(replace(c, audits=tuple(audits) or ("none",), **upd))
    return replace(rs, members=tuple(out))


def select(rs: RashomonSet, policy) -> ModelCard:
    """Lexicographic minimum over ``policy`` criteria, then lowest model id."""
    policy = list(policy)
    if not rs.members:
        raise ValueError("empty Rashomon set")
    if not policy:
        raise ValueError("policy needs at least one criterion")
    return min(rs.members, key=lambda c: tuple(c.criterion(p) for p in policy) + (c.model_id,))


def pareto_front(cards, criteria) -> list[ModelCard]:
    """Cards not dominated on ``criteria`` (all <= and one <), in input order."""
    vecs = [tuple(c.criterion(k) for k in criteria) for c in cards]
    front = []
    for i, v in enumerate(vecs):
        dominated = any(all(a <= b for a, b in zip(w, v)) and any(a < b for a, b in zip(w, v))
                        for j, w in enumerate(vecs) if j != i)
        if not dominated:
            front.append(cards[i])
    return front

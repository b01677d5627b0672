"""Structural causal models: ancestral sampling, interventions, causal effects,
counterfactuals, and a check that a predictor respects the causal graph.

Each variable draws its noise from its own random stream (one child of the
seed per declared variable), so an intervened model sampled with the same seed
reuses exactly the same noise. Differences between the two samples are then
caused by the intervention alone.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Column, Dataset, Schema


class ScmError(ValueError):
    """The causal model is invalid for the requested operation."""


class UnsupportedCounterfactualError(ScmError):
    """A mechanism cannot be inverted to recover its noise."""


# ---- noise ---------------------------------------------------------------

@dataclass(frozen=True)
class Gaussian:
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.sd)) or self.sd < 0:
            raise ScmError("Gaussian noise needs a finite mean and sd >= 0")

    def draw(self, rng, n):
        return self.mean + self.sd * rng.standard_normal(n)

    def to_dict(self):
        return {"gaussian": [self.mean, self.sd]}


@dataclass(frozen=True)
class Categorical:
    values: tuple
    probs: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.values) != len(self.probs) or not self.values:
            raise ScmError("categorical noise needs one probability per value")
        if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-9:
            raise ScmError("categorical probabilities must be non-negative and sum to 1")

    def draw(self, rng, n):
        p = np.asarray(self.probs) / sum(self.probs)
        return np.asarray(self.values)[rng.choice(len(self.values), size=n, p=p)]

    def to_dict(self):
        return {"categorical": {"values": list(self.values), "probs": list(self.probs)}}


# ---- mechanisms ----------------------------------------------------------

@dataclass(frozen=True)
class LinearAdditive:
    """``x = intercept + sum(coef_p * x_p) + u``."""

    coefficients: tuple = ()
    intercept: float = 0.0

    def __post_init__(self):
        items = self.coefficients.items() if isinstance(self.coefficients, dict) else self.coefficients
        object.__setattr__(self, "coefficients", tuple((str(p), float(c)) for p, c in items))

    @property
    def references(self) -> set:
        return {p for p, _ in self.coefficients}

    def evaluate(self, values: dict, noise):
        out = self.intercept + noise
        for p, c in self.coefficients:
            out = out + c * values[p]
        return out

    def abduct(self, values: dict, x):
        return x - self.evaluate(values, 0.0)

    def to_dict(self):
        return {"linear": {"intercept": self.intercept, "coefficients": dict(self.coefficients)}}


@dataclass(frozen=True)
class Table:
    """Lookup on ``(parent values..., noise value)``; without noise the key is the parents alone."""

    parents: tuple
    rows: tuple
    uses_noise: bool = True

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        rows = tuple(tuple(float(v) for v in r) for r in self.rows)
        width = len(self.parents) + (1 if self.uses_noise else 0) + 1
        if any(len(r) != width for r in rows):
            raise ScmError(f"table rows need {width} entries")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "_lookup", {r[:-1]: r[-1] for r in rows})

    @property
    def references(self) -> set:
        return set(self.parents)

    def evaluate(self, values: dict, noise):
        noise = np.asarray(noise, dtype=float)
        cols = [np.broadcast_to(np.asarray(values[p], dtype=float), noise.shape).reshape(-1)
                for p in self.parents]
        if self.uses_noise:
            cols.append(noise.reshape(-1))
        keys = zip(*cols) if cols else [()] * noise.size
        try:
            out = [self._lookup[tuple(float(v) for v in k)] for k in keys]
        except KeyError as exc:
            raise ScmError(f"table has no entry for {exc.args[0]}") from None
        return np.array(out, dtype=float).reshape(noise.shape)

    def abduct(self, values, x):
        raise UnsupportedCounterfactualError("table mechanisms are not invertible")

    def to_dict(self):
        return {"table": {"parents": list(self.parents), "uses_noise": self.uses_noise,
                          "rows": [list(r) for r in self.rows]}}


@dataclass(frozen=True)
class Constant:
    value: float

    references = frozenset()

    def evaluate(self, values, noise):
        return np.full(np.shape(noise), float(self.value)) if np.ndim(noise) else float(self.value)

    def abduct(self, values, x):
        return 0.0

    def to_dict(self):
        return {"constant": float(self.value)}


@dataclass(frozen=True)
class StructuralEquation:
    target: str
    parents: tuple = ()
    mechanism: object = field(default_factory=LinearAdditive)
    noise: object | None = None

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))

    def evaluate(self, values, noise):
        return self.mechanism.evaluate(values, noise if self.noise is not None else np.zeros_like(noise))

    def to_dict(self):
        return {"name": self.target, "parents": list(self.parents), "mechanism": self.mechanism.to_dict(),
                "noise": None if self.noise is None else self.noise.to_dict()}


@dataclass(frozen=True)
class ScmModel:
    """Equations in declaration order; ``edges`` defaults to the graph the equations induce."""

    equations: tuple
    edges: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(self.equations))
        if self.edges is None:
            object.__setattr__(self, "edges", induced_edges(self.equations))
        else:
            object.__setattr__(self, "edges", tuple(sorted((str(a), str(b)) for a, b in self.edges)))

    @property
    def variables(self) -> list[str]:
        return [e.target for e in self.equations]

    def equation(self, name: str) -> StructuralEquation:
        for e in self.equations:
            if e.target == name:
                return e
        raise ScmError(f"unknown variable {name!r}")

    def parents(self, name: str) -> tuple:
        return self.equation(name).parents

    def ancestors(self, name: str) -> set:
        out, stack = set(), list(self.parents(name))
        while stack:
            p = stack.pop()
            if p not in out:
                out.add(p)
                stack.extend(self.parents(p))
        return out

    def descendants(self, name: str) -> set:
        return {v for v in self.variables if name in self.ancestors(v)}

    def to_dict(self):
        return {"variables": [e.to_dict() for e in self.equations], "edges": [list(e) for e in self.edges]}


def induced_edges(equations) -> tuple:
    return tuple(sorted((p, e.target) for e in equations for p in e.parents))


def _topological(equations) -> list[str] | None:
    """Kahn's algorithm, releasing ready variables in declaration order; None on a cycle."""
    names = [e.target for e in equations]
    pending = {e.target: {p for p in e.parents if p in names} for e in equations}
    order = []
    while pending:
        ready = [v for v in names if v in pending and not pending[v]]
        if not ready:
            return None
        v = ready[0]
        order.append(v)
        del pending[v]
        for deps in pending.values():
            deps.discard(v)
    return order


def validate_scm(scm: ScmModel) -> list[str]:
    """Violations (empty when valid): duplicates, undeclared parents, mechanisms
    referencing non-parents, a stored graph differing from the equations, cycles."""
    problems = []
    names = [e.target for e in scm.equations]
    for v in sorted({v for v in names if names.count(v) > 1}):
        problems.append(f"variable {v!r} has more than one equation")
    for e in scm.equations:
        for p in e.parents:
            if p not in names:
                problems.append(f"{e.target!r} references undeclared parent {p!r}")
            if p == e.target:
                problems.append(f"{e.target!r} lists itself as a parent")
        for p in sorted(set(e.mechanism.references) - set(e.parents)):
            problems.append(f"mechanism of {e.target!r} uses {p!r}, which is not among its parents")
    if tuple(scm.edges) != induced_edges(scm.equations):
        problems.append("stored graph does not match the graph induced by the equations")
    if not problems and _topological(scm.equations) is None:
        problems.append("the graph contains a cycle")
    return problems


def _require_valid(scm: ScmModel) -> list[str]:
    problems = validate_scm(scm)
    if problems:
        raise ScmError("invalid SCM: " + "; ".join(problems))
    return _topological(scm.equations)


def _noise(scm: ScmModel, n: int, seed: int) -> dict:
    streams = np.random.SeedSequence(seed).spawn(len(scm.equations))
    out = {}
    for e, ss in zip(scm.equations, streams):
        rng = np.random.default_rng(ss)
        out[e.target] = e.noise.draw(rng, n) if e.noise is not None else np.zeros(n)
    return out


def _simulate(scm: ScmModel, noise: dict, n: int) -> dict:
    order = _require_valid(scm)
    values = {}
    for v in order:
        eq = scm.equation(v)
        values[v] = np.array(eq.evaluate(values, noise[v]), dtype=float).reshape(n)
    return values


def sample_arrays(scm: ScmModel, n: int, seed: int) -> dict:
    if n < 1:
        raise ValueError("n must be >= 1")
    _require_valid(scm)
    return _simulate(scm, _noise(scm, n, seed), n)


def sample(scm: ScmModel, n: int, seed: int) -> Dataset:
    """Ancestral sampling of ``n`` rows, columns in declaration order."""
    values = sample_arrays(scm, n, seed)
    schema = Schema(tuple(Column(v) for v in scm.variables))
    return Dataset(schema, {v: values[v] for v in scm.variables})


@dataclass(frozen=True)
class Intervention:
    """Hard (``value``) or soft (``equation`` replacing the target's mechanism)."""

    variable: str
    value: float | None = None
    equation: StructuralEquation | None = None

    def __post_init__(self):
        if (self.value is None) == (self.equation is None):
            raise ScmError("an intervention sets either a value (hard) or an equation (soft)")
        if self.equation is not None and self.equation.target != self.variable:
            raise ScmError("soft intervention equation targets a different variable")

    @property
    def hard(self) -> bool:
        return self.value is not None


def do(variable: str, value: float) -> Intervention:
    return Intervention(variable, float(value))


def intervene(scm: ScmModel, iv: Intervention) -> ScmModel:
    """New model with ``iv.variable``'s equation replaced; the input is untouched."""
    scm.equation(iv.variable)
    new_eq = (StructuralEquation(iv.variable, (), Constant(iv.value), None) if iv.hard else iv.equation)
    eqs = tuple(new_eq if e.target == iv.variable else e for e in scm.equations)
    out = ScmModel(eqs)
    _require_valid(out)
    return out


@dataclass(frozen=True)
class EffectEstimate:
    mean: dict
    stderr: dict
    n: int

    def to_dict(self):
        return {"n": self.n, "mean": dict(self.mean), "stderr": dict(self.stderr)}


def causal_effect(scm: ScmModel, iv: Intervention, n: int, seed: int) -> EffectEstimate:
    """Mean of ``x^I - x`` per variable over ``n`` coupled samples, with standard errors."""
    before = sample_arrays(scm, n, seed)
    after = sample_arrays(intervene(scm, iv), n, seed)
    mean, se = {}, {}
    for v in scm.variables:
        d = after[v] - before[v]
        mean[v] = float(d.mean())
        se[v] = float(d.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return EffectEstimate(mean, se, n)


def counterfactual(scm: ScmModel, observation: dict, iv: Intervention) -> dict:
    """Abduction, action, prediction for one fully observed record."""
    order = _require_valid(scm)
    missing = [v for v in scm.variables if v not in observation]
    if missing:
        raise ScmError(f"observation lacks variables {missing}")
    obs = {v: float(observation[v]) for v in scm.variables}
    noise = {}
    for v in order:
        eq = scm.equation(v)
        noise[v] = 0.0 if eq.noise is None else float(eq.mechanism.abduct(obs, obs[v]))
    new = intervene(scm, iv)
    out = {}
    for v in _topological(new.equations):
        eq = new.equation(v)
        out[v] = float(eq.evaluate(out, np.float64(noise[v])))
    return {v: out[v] for v in scm.variables}


# ---- consistency of a predictor with the graph ---------------------------

@dataclass(frozen=True)
class FeatureSensitivity:
    feature: str
    sensitivity: float
    ancestor: bool
    violates: bool
    grid: tuple = ()


@dataclass(frozen=True)
class ConsistencyReport:
    indicator: bool
    target: str
    tol: float
    features: tuple

    def to_dict(self):
        return {"indicator": self.indicator, "target": self.target, "tol": self.tol,
                "features": [{"feature": f.feature, "sensitivity": f.sensitivity, "ancestor": f.ancestor,
                              "violates": f.violates, "grid": list(f.grid)} for f in self.features]}


def _model_output(model, X) -> np.ndarray:
    from .models.base import predict_ids, predict_proba
    if model.is_classifier:
        return predict_proba(model, X)
    return predict_ids(model, X)[:, None]


def causal_consistency(f, scm: ScmModel, target: str, grid: dict | None = None, n: int = 2000, seed: int = 0,
                       tol: float = 1e-6) -> tuple[bool, ConsistencyReport]:
    """Does ``f`` ignore every feature that is not a causal ancestor of ``target``?

    For each feature ``j``, sensitivity is the mean over the grid of ``do(x_j = a)``
    values and ``n`` coupled samples of the largest absolute change in ``f``'s
    output (class probabilities for classifiers). The default grid is the
    feature's observational mean plus and minus one standard deviation.
    """
    if target not in scm.variables:
        raise ValueError(f"target {target!r} is not a variable of the SCM")
    feats = list(f.feature_names)
    bad = [v for v in feats if v not in scm.variables or v == target]
    if bad:
        raise ValueError(f"model features {bad} are not non-target SCM variables")
    base = sample_arrays(scm, n, seed)
    X0 = np.column_stack([base[v] for v in feats])
    y0 = _model_output(f, X0)
    anc = scm.ancestors(target)
    rows = []
    for v in feats:
        if grid is not None and v in grid:
            alphas = tuple(float(a) for a in grid[v])
        else:
            mu, sd = float(base[v].mean()), float(base[v].std())
            alphas = (mu - sd, mu + sd)
        sens = []
        for a in alphas:
            after = sample_arrays(intervene(scm, do(v, a)), n, seed)
            X1 = np.column_stack([after[w] for w in feats])
            sens.append(float(np.abs(_model_output(f, X1) - y0).max(axis=1).mean()))
        s = float(np.mean(sens))
        is_anc = v in anc
        rows.append(FeatureSensitivity(v, s, is_anc, (not is_anc) and s > tol, alphas))
    indicator = not any(r.violates for r in rows)
    return indicator, ConsistencyReport(indicator, target, tol, tuple(rows))


# ---- SCM description files -----------------------------------------------

def _noise_from(d):
    if d is None:
        return None
    if "gaussian" in d:
        mean, sd = d["gaussian"]
        return Gaussian(float(mean), float(sd))
    if "categorical" in d:
        return Categorical(tuple(d["categorical"]["values"]), tuple(d["categorical"]["probs"]))
    raise ScmError(f"unknown noise specification {d!r}")


def _mechanism_from(d):
    if "linear" in d:
        lin = d["linear"]
        return LinearAdditive(tuple(lin.get("coefficients", {}).items()), float(lin.get("intercept", 0.0)))
    if "table" in d:
        t = d["table"]
        return Table(tuple(t["parents"]), tuple(tuple(r) for r in t["rows"]), bool(t.get("uses_noise", True)))
    if "constant" in d:
        return Constant(float(d["constant"]))
    raise ScmError(f"unknown mechanism specification {d!r}")


def scm_from_dict(d: dict) -> ScmModel:
    eqs = tuple(StructuralEquation(v["name"], tuple(v.get("parents", ())), _mechanism_from(v["mechanism"]),
                                   _noise_from(v.get("noise"))) for v in d["variables"])
    edges = d.get("edges")
    return ScmModel(eqs, None if edges is None else tuple(tuple(e) for e in edges))


def load_scm(path) -> ScmModel:
    return scm_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_scm(scm: ScmModel, path) -> None:
    Path(path).write_text(json.dumps(scm.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")


def linear_chain(weights=(2.0,), sd: float = 1.0) -> ScmModel:
    """``x1 ~ N(0, sd)``, ``x_{i+1} = w_i x_i + N(0, sd)``."""
    eqs = [StructuralEquation("x1", (), LinearAdditive(), Gaussian(0.0, sd))]
    for i, w in enumerate(weights, start=1):
        eqs.append(StructuralEquation(f"x{i + 1}", (f"x{i}",), LinearAdditive(((f"x{i}", w),)), Gaussian(0.0, sd)))
    return ScmModel(tuple(eqs))

"""Piecewise-constant GAM / GA2M fit by cyclic backfitting over quantile bins."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linear import LINKS, FitError, sigmoid

# prior curvature added to each bin's Newton step under the logistic link
NEWTON_RIDGE = 1.0


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _bin_of(edges: np.ndarray, x) -> np.ndarray:
    # bins are [e_i, e_{i+1}); values outside the edge range clamp to the end bins
    nb = len(edges) - 1
    return np.clip(np.searchsorted(edges, x, side="right") - 1, 0, nb - 1)


@dataclass(frozen=True, eq=False)
class ShapeFunction:
    """Step function of one feature: ``values[b]`` on ``[edges[b], edges[b+1])``."""

    feature: int
    edges: np.ndarray
    values: np.ndarray
    counts: np.ndarray | None = None

    def __post_init__(self):
        edges, values = _frozen(self.edges), _frozen(self.values)
        if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly ascending with at least two entries")
        if values.shape != (len(edges) - 1,) or not np.all(np.isfinite(values)):
            raise ValueError("need one finite value per bin")
        counts = _frozen(np.zeros(len(values)) if self.counts is None else self.counts)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "counts", counts)

    def bin_index(self, x) -> np.ndarray:
        return _bin_of(self.edges, np.asarray(x, dtype=float))

    def __call__(self, x):
        return self.values[self.bin_index(x)]


@dataclass(frozen=True, eq=False)
class InteractionShape:
    """Step function on the 2-D grid of two features' bins."""

    features: tuple
    edges: tuple
    values: np.ndarray
    counts: np.ndarray | None = None

    def __post_init__(self):
        i, j = (int(f) for f in self.features)
        if i == j:
            raise ValueError("interaction needs two distinct features")
        e0, e1 = (_frozen(e) for e in self.edges)
        for e in (e0, e1):
            if len(e) < 2 or np.any(np.diff(e) <= 0):
                raise ValueError("bin edges must be strictly ascending")
        values = _frozen(self.values)
        if values.shape != (len(e0) - 1, len(e1) - 1) or not np.all(np.isfinite(values)):
            raise ValueError("interaction values must be a finite bins_i x bins_j grid")
        counts = _frozen(np.zeros(values.shape) if self.counts is None else self.counts)
        object.__setattr__(self, "features", (i, j))
        object.__setattr__(self, "edges", (e0, e1))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "counts", counts)

    def cell_index(self, xi, xj):
        return _bin_of(self.edges[0], np.asarray(xi, float)), _bin_of(self.edges[1], np.asarray(xj, float))

    def __call__(self, xi, xj):
        a, b = self.cell_index(xi, xj)
        return self.values[a, b]


@dataclass(frozen=True, eq=False)
class GamModel:
    theta0: float
    shapes: tuple
    interactions: tuple = ()
    link: str = "identity"
    m: int | None = None

    def __post_init__(self):
        if self.link not in LINKS:
            raise ValueError(f"unknown link {self.link!r}")
        shapes, inter = tuple(self.shapes), tuple(self.interactions)
        feats = [s.feature for s in shapes]
        if len(set(feats)) != len(feats):
            raise ValueError("at most one single-feature shape per feature")
        pairs = [frozenset(s.features) for s in inter]
        if len(set(pairs)) != len(pairs):
            raise ValueError("interaction pairs must be distinct")
        m = self.m
        if m is None:
            used = feats + [f for s in inter for f in s.features]
            m = max(used) + 1 if used else 0
        object.__setattr__(self, "shapes", shapes)
        object.__setattr__(self, "interactions", inter)
        object.__setattr__(self, "theta0", float(self.theta0))
        object.__setattr__(self, "m", int(m))

    def terms(self, X) -> np.ndarray:
        """Per-term contributions, ``n x (len(shapes) + len(interactions))``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.m:
            raise ValueError(f"expected {self.m} features, got {X.shape[1]}")
        cols = [s(X[:, s.feature]) for s in self.shapes]
        cols += [s(X[:, s.features[0]], X[:, s.features[1]]) for s in self.interactions]
        if not cols:
            return np.zeros((X.shape[0], 0))
        return np.column_stack(cols)

    def score(self, X) -> np.ndarray:
        return self.theta0 + self.terms(X).sum(axis=1)

    def predict(self, X) -> np.ndarray:
        s = self.score(X)
        return sigmoid(s) if self.link == "logistic" else s


def predict_gam(model: GamModel, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != model.m:
        raise ValueError(f"instance has {x.shape[0]} features, model expects {model.m}")
    return float(model.predict(x[None, :])[0])


def quantile_edges(x: np.ndarray, bins: int) -> np.ndarray:
    """Bin edges for ``x``: quantile cuts, or midpoints when there are few distinct values."""
    distinct = np.unique(x)
    if len(distinct) == 1:
        v = distinct[0]
        return np.array([v - 0.5, v + 0.5])
    if bins == 1:
        return np.array([distinct[0], distinct[-1]])
    if len(distinct) <= bins:
        if len(distinct) < bins:
            warnings.warn(f"bins clamped from {bins} to {len(distinct)} distinct values", UserWarning,
                          stacklevel=3)
        mids = (distinct[:-1] + distinct[1:]) / 2
        return np.concatenate([[distinct[0]], mids, [distinct[-1]]])
    cuts = np.quantile(x, np.linspace(0, 1, bins + 1)[1:-1])
    cuts = np.unique(cuts)
    cuts = cuts[(cuts > distinct[0]) & (cuts < distinct[-1])]
    return np.concatenate([[distinct[0]], cuts, [distinct[-1]]])


def fit_gam(X, y, bins: int = 16, interactions=(), passes: int = 10,
            link: str = "identity") -> GamModel:
    """Backfit one step shape per feature plus the requested pairwise interaction shapes.

    Each pass refits every term in turn to the working residual (identity link)
    or by one Newton step on the log-loss gradient (logistic link), averaged per
    bin. Terms are centred to zero training mean, with the offset moved into
    ``theta0``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X must be a non-empty 2-D matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(y) != len(X):
        raise ValueError("X and y have different lengths")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if link not in LINKS:
        raise ValueError(f"unknown link {link!r}")
    n, m = X.shape
    pairs = []
    for p in interactions:
        i, j = (int(v) for v in p)
        if i == j or not (0 <= i < m and 0 <= j < m):
            raise ValueError(f"invalid interaction pair {p!r}")
        key = (min(i, j), max(i, j))
        if key in pairs:
            raise ValueError(f"duplicate interaction pair {p!r}")
        pairs.append(key)
    if link == "logistic":
        if not np.all(np.isin(y, (0.0, 1.0))):
            raise ValueError("logistic targets must be 0/1")
        if y.min() == y.max():
            raise FitError("logistic GAM needs both classes present")

    edges = [quantile_edges(X[:, j], bins) for j in range(m)]
    bin_idx = [_bin_of(edges[j], X[:, j]) for j in range(m)]
    # each term: (flat bin index per row, number of cells)
    terms = [(bin_idx[j], len(edges[j]) - 1) for j in range(m)]
    for i, j in pairs:
        nj = len(edges[j]) - 1
        terms.append((bin_idx[i] * nj + bin_idx[j], (len(edges[i]) - 1) * nj))
    counts = [np.bincount(idx, minlength=nc).astype(float) for idx, nc in terms]
    values = [np.zeros(nc) for _, nc in terms]
    contrib = np.zeros((n, len(terms)))

    if link == "identity":
        theta0 = float(y.mean())
    else:
        p0 = float(y.mean())
        theta0 = float(np.log(p0 / (1 - p0)))
    eta = theta0 + contrib.sum(axis=1)

    for _ in range(passes):
        if link == "logistic":
            p = sigmoid(eta)
            step = float((y - p).sum() / max((p * (1 - p)).sum(), 1e-12))
            theta0 += step
            eta = eta + step
        for t, (idx, nc) in enumerate(terms):
            cnt = counts[t]
            if link == "identity":
                r = y - eta + contrib[:, t]
                sums = np.bincount(idx, weights=r, minlength=nc)
                new = np.divide(sums, cnt, out=np.zeros(nc), where=cnt > 0)
            else:
                p = sigmoid(eta)
                g = np.bincount(idx, weights=y - p, minlength=nc)
                h = np.bincount(idx, weights=p * (1 - p), minlength=nc)
                new = values[t] + g / (h + NEWTON_RIDGE)
                new[cnt == 0] = 0.0
            offset = float((new * cnt).sum() / n)
            new = new - offset
            new[cnt == 0] = 0.0
            theta0 += offset
            col = new[idx]
            eta = eta - contrib[:, t] + col + offset
            contrib[:, t] = col
            values[t] = new

    shapes = tuple(ShapeFunction(j, edges[j], values[j], counts[j]) for j in range(m))
    inter = []
    for t, (i, j) in enumerate(pairs, start=m):
        shape = (len(edges[i]) - 1, len(edges[j]) - 1)
        inter.append(InteractionShape((i, j), (edges[i], edges[j]), values[t].reshape(shape),
                                      counts[t].reshape(shape)))
    return GamModel(theta0, shapes, tuple(inter), link, m)

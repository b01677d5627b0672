"""Linear and logistic models fit by proximal gradient descent."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LINKS = ("identity", "logistic")


class FitError(ValueError):
    """The learner cannot be fit on the given data (e.g. a single class)."""


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True, eq=False)
class LinearModel:
    theta0: float
    theta: np.ndarray
    link: str = "identity"

    def __post_init__(self):
        if self.link not in LINKS:
            raise ValueError(f"unknown link {self.link!r}")
        theta = np.array(self.theta, dtype=float).reshape(-1)
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "theta0", float(self.theta0))

    @property
    def m(self) -> int:
        return len(self.theta)

    def score(self, X) -> np.ndarray:
        """Pre-link score ``theta . x + theta0`` for each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.m:
            raise ValueError(f"expected {self.m} features, got {X.shape[1]}")
        return X @ self.theta + self.theta0

    def predict(self, X) -> np.ndarray:
        s = self.score(X)
        return sigmoid(s) if self.link == "logistic" else s


def predict_linear(model: LinearModel, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != model.m:
        raise ValueError(f"instance has {x.shape[0]} features, model expects {model.m}")
    return float(model.predict(x[None, :])[0])


def smooth_loss(X, y, theta0, theta, l2_weight=0.0, link="logistic") -> float:
    """Differentiable part of the objective: mean data loss plus ``l2 * ||theta||^2``.

    The data loss is the logistic log-loss for ``link="logistic"`` and half the
    mean squared error for ``link="identity"``.
    """
    z = X @ theta + theta0
    if link == "logistic":
        data = np.mean(np.logaddexp(0.0, z) - y * z)
    else:
        data = 0.5 * np.mean((z - y) ** 2)
    return float(data + l2_weight * np.dot(theta, theta))


def smooth_gradient(X, y, theta0, theta, l2_weight=0.0, link="logistic"):
    """Gradient of :func:`smooth_loss` as ``(d/dtheta0, d/dtheta)``."""
    z = X @ theta + theta0
    r = (sigmoid(z) if link == "logistic" else z) - y
    n = len(y)
    return float(r.sum() / n), X.T @ r / n + 2.0 * l2_weight * theta


def objective(X, y, theta0, theta, l1_weight=0.0, l2_weight=0.0, link="logistic") -> float:
    return smooth_loss(X, y, theta0, theta, l2_weight, link) + l1_weight * float(np.abs(theta).sum())


def _soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X must be a non-empty 2-D matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != X.shape[0]:
        raise ValueError("X and y have different lengths")
    return X, y


def _prox_grad(X, y, l1_weight, l2_weight, max_iters, tol, link):
    if l1_weight < 0 or l2_weight < 0:
        raise ValueError("regularization weights must be non-negative")
    n, m = X.shape
    # the intercept is unpenalized, so centring X is an exact reparameterization
    mu = X.mean(axis=0)
    Xc = X - mu
    curv = 0.25 if link == "logistic" else 1.0
    spectral = np.linalg.norm(np.column_stack([np.ones(n), Xc]), 2) ** 2 if m else float(n)
    step = 1.0 / (curv * spectral / n + 2.0 * l2_weight)
    b, w = 0.0, np.zeros(m)
    for _ in range(max_iters):
        g0, g = smooth_gradient(Xc, y, b, w, l2_weight, link)
        b_new = b - step * g0
        w_new = _soft_threshold(w - step * g, step * l1_weight)
        change = max(abs(b_new - b), float(np.max(np.abs(w_new - w))) if m else 0.0)
        b, w = b_new, w_new
        if change < tol:
            break
    return b - float(w @ mu), w


def fit_logistic(X, y, l1_weight: float = 0.0, l2_weight: float = 0.0,
                 max_iters: int = 5000, tol: float = 1e-8) -> LinearModel:
    """Minimize mean log-loss + ``l1*||theta||_1`` + ``l2*||theta||_2^2``.

    Proximal gradient (ISTA) with the fixed step ``1/L`` from the Lipschitz
    bound of the smooth part, started at zero. Stops when no parameter moves by
    ``tol`` or more, or after ``max_iters`` steps.
    """
    X, y = _check_xy(X, y)
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise ValueError("logistic targets must be 0/1")
    if y.min() == y.max():
        raise FitError("logistic fit needs both classes present")
    theta0, theta = _prox_grad(X, y, l1_weight, l2_weight, max_iters, tol, "logistic")
    return LinearModel(theta0, theta, "logistic")


def fit_linear(X, y, l1_weight: float = 0.0, l2_weight: float = 0.0,
               max_iters: int = 5000, tol: float = 1e-10) -> LinearModel:
    """Least squares (half mean squared error) with the same elastic-net penalty."""
    X, y = _check_xy(X, y)
    theta0, theta = _prox_grad(X, y, l1_weight, l2_weight, max_iters, tol, "identity")
    return LinearModel(theta0, theta, "identity")

"""Instance-based (k-nearest-neighbour) models over an explicit memory."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

METRICS = ("euclidean", "manhattan", "cosine")


def distances(memory: np.ndarray, x: np.ndarray, metric: str) -> np.ndarray:
    diff = memory - x
    if metric == "euclidean":
        return np.sqrt((diff * diff).sum(axis=1))
    if metric == "manhattan":
        return np.abs(diff).sum(axis=1)
    if metric == "cosine":
        norms = np.linalg.norm(memory, axis=1) * np.linalg.norm(x)
        sim = np.divide(memory @ x, norms, out=np.zeros(len(memory)), where=norms > 0)
        # zero vectors have no direction: treat them as orthogonal to everything
        return 1.0 - np.clip(sim, -1.0, 1.0)
    raise ValueError(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class Neighbor:
    index: int
    instance: tuple
    label: int
    distance: float


@dataclass(frozen=True, eq=False)
class InstanceModel:
    memory_X: np.ndarray
    memory_y: np.ndarray
    k: int = 5
    metric: str = "euclidean"
    voting: str = "majority"
    n_classes: int | None = None

    def __post_init__(self):
        X = np.array(self.memory_X, dtype=float)
        y = np.array(self.memory_y, dtype=int).reshape(-1)
        if X.ndim != 2 or len(X) == 0:
            raise ValueError("memory must be a non-empty 2-D matrix")
        if len(y) != len(X):
            raise ValueError("memory instances and labels differ in length")
        if not np.all(np.isfinite(X)):
            raise ValueError("memory contains non-finite values")
        if not 1 <= self.k <= len(X):
            raise ValueError(f"k must lie in [1, {len(X)}]")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.voting not in ("majority", "average"):
            raise ValueError(f"unknown voting schema {self.voting!r}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "memory_X", X)
        object.__setattr__(self, "memory_y", y)
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "n_classes", int(self.n_classes if self.n_classes is not None else y.max() + 1))

    @property
    def m(self) -> int:
        return self.memory_X.shape[1]

    def neighbors(self, x) -> list[Neighbor]:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.m:
            raise ValueError(f"instance has {x.shape[0]} features, memory has {self.m}")
        d = distances(self.memory_X, x, self.metric)
        # stable sort keeps the lower memory index first among equal distances
        idx = np.argsort(d, kind="stable")[: self.k]
        return [Neighbor(int(i), tuple(float(v) for v in self.memory_X[i]), int(self.memory_y[i]), float(d[i]))
                for i in idx]

    def tally(self, neighbors) -> np.ndarray:
        return np.bincount([nb.label for nb in neighbors], minlength=self.n_classes)

    def vote(self, neighbors) -> int:
        if self.voting == "average":
            mean = np.mean([nb.label for nb in neighbors])
            return int(np.argmin(np.abs(np.arange(self.n_classes) - mean)))
        return int(np.argmax(self.tally(neighbors)))

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.vote(self.neighbors(x)) for x in X], dtype=int)

    def proba(self, X) -> np.ndarray:
        """Neighbour label frequencies."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.tally(self.neighbors(x)) / self.k for x in X])


def predict_knn(model: InstanceModel, x) -> tuple[int, list[Neighbor]]:
    nbrs = model.neighbors(x)
    return model.vote(nbrs), nbrs

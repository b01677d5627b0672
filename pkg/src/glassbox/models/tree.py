"""Binary decision trees grown greedily on Gini impurity (CART-style)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# minimum impurity decrease for a split to count as an improvement
GAIN_EPS = 1e-12


@dataclass(frozen=True)
class Node:
    """Internal node when ``feature`` is set, leaf otherwise."""

    feature: int | None = None
    threshold: float | None = None
    left: int | None = None
    right: int | None = None
    label: int | None = None
    counts: tuple | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"label": self.label, "counts": list(self.counts or ())}
        return {"feature": self.feature, "threshold": self.threshold,
                "left": self.left, "right": self.right}

    @classmethod
    def from_dict(cls, d: dict) -> "Node":
        if "feature" in d:
            return cls(int(d["feature"]), float(d["threshold"]), int(d["left"]), int(d["right"]))
        return cls(label=int(d["label"]), counts=tuple(int(c) for c in d.get("counts", ())))


def leaf_node(label: int, counts=None) -> Node:
    return Node(label=int(label), counts=None if counts is None else tuple(int(c) for c in counts))


def split_node(feature: int, threshold: float, left: int, right: int) -> Node:
    return Node(int(feature), float(threshold), int(left), int(right))


@dataclass(frozen=True)
class DecisionTree:
    nodes: tuple
    root: int = 0
    n_classes: int = 2

    def __post_init__(self):
        nodes = tuple(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        n = len(nodes)
        if not 0 <= self.root < n:
            raise ValueError("root index out of range")
        parents = [0] * n
        for nd in nodes:
            if nd.is_leaf:
                if nd.label is None or not 0 <= nd.label < self.n_classes:
                    raise ValueError("leaf label is not a valid class id")
                continue
            if not np.isfinite(nd.threshold):
                raise ValueError("split thresholds must be finite")
            for c in (nd.left, nd.right):
                if c is None or not 0 <= c < n:
                    raise ValueError("child index out of range")
                parents[c] += 1
        if parents[self.root] != 0:
            raise ValueError("the root cannot have a parent")
        if any(p != 1 for i, p in enumerate(parents) if i != self.root):
            raise ValueError("every non-root node needs exactly one parent")
        # with one parent each, reachability from the root rules out cycles
        depth, seen, stack = 0, set(), [(self.root, 0)]
        while stack:
            i, d = stack.pop()
            seen.add(i)
            depth = max(depth, d)
            if not nodes[i].is_leaf:
                stack += [(nodes[i].left, d + 1), (nodes[i].right, d + 1)]
        if len(seen) != n:
            raise ValueError("the node graph is not a single rooted tree")
        object.__setattr__(self, "_depth", depth)

    @property
    def depth(self) -> int:
        """Number of edges on the longest root-to-leaf path."""
        return self._depth

    @property
    def n_leaves(self) -> int:
        return sum(nd.is_leaf for nd in self.nodes)

    def leaf_of(self, x) -> int:
        return decision_path(self, x)[-1]

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.nodes[self.leaf_of(x)].label for x in X], dtype=int)

    def proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros((len(X), self.n_classes))
        for r, x in enumerate(X):
            nd = self.nodes[self.leaf_of(x)]
            if nd.counts and sum(nd.counts) > 0:
                out[r] = np.asarray(nd.counts, dtype=float) / sum(nd.counts)
            else:
                out[r, nd.label] = 1.0
        return out


def decision_path(t: DecisionTree, x) -> list[int]:
    """Node indices visited from the root to the leaf; ``x[f] <= thr`` goes left."""
    x = np.asarray(x, dtype=float).reshape(-1)
    i, path = t.root, [t.root]
    while not t.nodes[i].is_leaf:
        nd = t.nodes[i]
        i = nd.left if x[nd.feature] <= nd.threshold else nd.right
        path.append(i)
    return path


def predict_tree(t: DecisionTree, x) -> int:
    return t.nodes[decision_path(t, x)[-1]].label


def _gini_counts(counts: np.ndarray) -> np.ndarray:
    tot = counts.sum(axis=-1)
    safe = np.where(tot > 0, tot, 1)
    return 1.0 - ((counts / safe[..., None]) ** 2).sum(axis=-1)


def _best_split(X, y, n_classes, min_leaf):
    n = len(y)
    parent = np.bincount(y, minlength=n_classes)
    base = _gini_counts(parent.astype(float))
    best = None  # (impurity, feature, threshold)
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        v = X[order, j]
        onehot = np.eye(n_classes)[y[order]]
        left = np.cumsum(onehot, axis=0)[:-1]
        cut = np.flatnonzero(v[:-1] < v[1:])
        nl = cut + 1
        ok = (nl >= min_leaf) & (n - nl >= min_leaf)
        cut, nl = cut[ok], nl[ok]
        if len(cut) == 0:
            continue
        lc = left[cut]
        rc = parent - lc
        imp = (nl * _gini_counts(lc) + (n - nl) * _gini_counts(rc)) / n
        k = int(np.argmin(imp))  # first minimum = lowest threshold
        thr = (v[cut[k]] + v[cut[k] + 1]) / 2
        if best is None or imp[k] < best[0] - GAIN_EPS:
            best = (float(imp[k]), j, float(thr))
    if best is None or base - best[0] <= GAIN_EPS:
        return None
    return best[1], best[2]


def induce_tree(X, y, max_depth: int = 3, min_leaf: int = 1, n_classes: int | None = None) -> DecisionTree:
    """Grow a tree top-down, splitting on the weighted-Gini-minimizing midpoint.

    Ties are broken by lower feature index, then lower threshold. A node
    becomes a leaf when it is pure, at ``max_depth``, or when no split leaves
    at least ``min_leaf`` rows on each side.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X must be a non-empty 2-D matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    y = np.asarray(y)
    if y.dtype.kind == "f" and not np.all(y == np.round(y)):
        raise ValueError("induce_tree supports classification targets only")
    y = y.astype(int)
    if max_depth < 1 or min_leaf < 1:
        raise ValueError("max_depth and min_leaf must be >= 1")
    n_classes = int(n_classes if n_classes is not None else y.max() + 1)
    nodes: list = []

    def grow(idx, depth):
        me = len(nodes)
        nodes.append(None)
        counts = np.bincount(y[idx], minlength=n_classes)
        found = None
        if depth < max_depth and np.count_nonzero(counts) > 1:
            found = _best_split(X[idx], y[idx], n_classes, min_leaf)
        if found is None:
            nodes[me] = leaf_node(int(np.argmax(counts)), counts)
            return me
        j, thr = found
        go_left = X[idx, j] <= thr
        left = grow(idx[go_left], depth + 1)
        right = grow(idx[~go_left], depth + 1)
        nodes[me] = split_node(j, thr, left, right)
        return me

    grow(np.arange(len(y)), 0)
    return DecisionTree(tuple(nodes), 0, n_classes)

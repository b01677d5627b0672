"""Small hand-built fixtures from the Covid running example.

Feature order everywhere is ``(LungCapacity, COLevel)``; class ids follow
``COVID_CLASSES`` (0 = NoCovid, 1 = Covid).
"""
from __future__ import annotations

import numpy as np

from .data import BINARY, CATEGORICAL, COVID_CLASSES, COVID_FEATURES, Column, ColumnRole, Dataset, Schema
from .models.base import Model
from .models.knn import InstanceModel
from .models.rules import Condition, Rule, RuleSet
from .models.tree import DecisionTree, leaf_node, split_node

# five patients with a Covid label; PatientID is a direct identifier
PATIENTS = (
    ("001", 3.2, 5.1, 82.0, "Yes"),
    ("002", 4.5, 2.8, 95.0, "No"),
    ("003", 2.9, 6.0, 76.0, "Yes"),
    ("004", 5.0, 2.5, 98.0, "No"),
    ("005", 3.5, 4.7, 85.0, "Yes"),
)

# standardized records used to illustrate local explanations
LOCAL_RECORD = (0.097, 0.191)
RULE_RECORD = (3.429, 2.332)
TREE_RECORD = (-1.568, 0.064)

# k-NN memory (raw units) and the query it is asked about
KNN_MEMORY_X = ((4.72, 6.09), (4.70, 6.08), (4.83, 6.08), (4.76, 6.00), (4.57, 6.00))
KNN_MEMORY_Y = ("NoCovid", "NoCovid", "NoCovid", "NoCovid", "Covid")
KNN_QUERY = (4.71, 6.09)
# distances as printed alongside the memory (two decimals)
KNN_REPORTED_DISTANCES = (0.01, 0.02, 0.13, 0.14, 0.20)


def patients() -> Dataset:
    schema = Schema((
        Column("PatientID", CATEGORICAL, frozenset({ColumnRole.DIRECT_IDENTIFIER})),
        Column("LungCapacity"),
        Column("COLevel"),
        Column("DiffusionCapacity"),
        Column("Covid", CATEGORICAL, frozenset({ColumnRole.LABEL}), ("No", "Yes")),
    ), BINARY)
    cols = list(zip(*PATIENTS))
    return Dataset(schema, dict(zip(schema.names, cols)))


def _wrap(family, estimator, hyperparams=None) -> Model:
    return Model(family, estimator, COVID_FEATURES, BINARY, COVID_CLASSES, hyperparams or {})


def lung_capacity_rule() -> RuleSet:
    """``LungCapacity > 1.37 -> Covid``; uncovered records default to NoCovid."""
    return RuleSet((Rule((Condition(0, ">", 1.37),), 1),), default=0, n_classes=2)


def depth3_tree() -> DecisionTree:
    """Depth-3 tree whose left branch is ``COLevel <= 0.324`` then ``LungCapacity <= -1.02 -> NoCovid``.

    Only that path is fixed; the remaining splits and leaves are illustrative.
    """
    nodes = [
        split_node(1, 0.324, 1, 4),      # 0: COLevel <= 0.324
        split_node(0, -1.02, 2, 3),      # 1: LungCapacity <= -1.02
        leaf_node(0, (12, 1)),           # 2: NoCovid
        leaf_node(0, (20, 6)),           # 3: NoCovid
        split_node(0, 0.5, 5, 8),        # 4: LungCapacity <= 0.5
        split_node(1, 1.1, 6, 7),        # 5: COLevel <= 1.1
        leaf_node(1, (5, 14)),           # 6: Covid
        leaf_node(1, (1, 22)),           # 7: Covid
        leaf_node(0, (9, 4)),            # 8: NoCovid
    ]
    return DecisionTree(tuple(nodes), 0, 2)


def knn_model(k: int = 5, metric: str = "euclidean") -> InstanceModel:
    y = np.array([COVID_CLASSES.index(c) for c in KNN_MEMORY_Y])
    return InstanceModel(np.array(KNN_MEMORY_X), y, k, metric, "majority", 2)


def rule_model() -> Model:
    return _wrap("rules", lung_capacity_rule())


def tree_model() -> Model:
    return _wrap("tree", depth3_tree())


def knn_wrapped(k: int = 5, metric: str = "euclidean") -> Model:
    return _wrap("knn", knn_model(k, metric), {"k": k, "metric": metric})

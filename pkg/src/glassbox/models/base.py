"""The fitted-model union: fitting by family name, dispatching prediction, JSON persistence."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data import Dataset, TaskKind, one_hot_encode
from .gam import GamModel, InteractionShape, ShapeFunction, fit_gam
from .knn import InstanceModel
from .linear import LinearModel, fit_linear, fit_logistic
from .rules import Condition, Rule, RuleSet, learn_rules
from .tree import DecisionTree, Node, induce_tree

FAMILIES = ("logistic", "linear", "gam", "rules", "tree", "knn")
FORMAT_VERSION = 1


class UnsupportedTaskError(ValueError):
    """The model family cannot handle the dataset's task kind."""


@dataclass(frozen=True, eq=False)
class Model:
    """A fitted estimator together with the schema facts needed to use it."""

    family: str
    estimator: object
    feature_names: tuple
    task: TaskKind
    classes: tuple | None = None
    hyperparams: dict = field(default_factory=dict)
    schema_fingerprint: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}")
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.classes is not None:
            object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def m(self) -> int:
        return len(self.feature_names)

    @property
    def is_classifier(self) -> bool:
        return self.task.is_classification


@dataclass(frozen=True)
class Prediction:
    label: str | None = None
    label_id: int | None = None
    score: float | None = None
    value: float | None = None


def _check_family_task(family: str, task: TaskKind, n_classes: int | None):
    if family in ("rules", "tree", "knn", "logistic") and not task.is_classification:
        raise UnsupportedTaskError(f"{family} models need a classification task, got {task.kind}")
    if family == "logistic" and n_classes != 2:
        raise UnsupportedTaskError("logistic models need a binary task")
    if family == "linear" and task.is_classification:
        raise UnsupportedTaskError("use the logistic family for classification")
    if family == "gam" and task.is_classification and n_classes != 2:
        raise UnsupportedTaskError("GAM classification is binary only")


def fit_arrays(family: str, X, y, task: TaskKind, feature_names=None, classes=None,
               schema_fingerprint: str = "", **hp) -> Model:
    X = np.asarray(X, dtype=float)
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{i + 1}" for i in range(X.shape[1]))
    if len(names) != X.shape[1]:
        raise ValueError("feature_names does not match the number of columns")
    n_classes = len(classes) if classes is not None else None
    _check_family_task(family, task, n_classes)
    hp = dict(hp)
    if family == "logistic":
        est = fit_logistic(X, y, **hp)
    elif family == "linear":
        est = fit_linear(X, y, **hp)
    elif family == "gam":
        link = "logistic" if task.is_classification else "identity"
        hp["interactions"] = [list(p) for p in hp.get("interactions", ())]
        est = fit_gam(X, y, link=link, **hp)
    elif family == "rules":
        est = learn_rules(X, y, n_classes=n_classes, **hp)
    elif family == "tree":
        est = induce_tree(X, y, n_classes=n_classes, **hp)
    else:
        est = InstanceModel(X, y, n_classes=n_classes, **hp)
    return Model(family, est, names, task, classes, hp, schema_fingerprint)


def fit_model(family: str, dataset: Dataset, **hp) -> Model:
    """Fit ``family`` on every feature column of ``dataset`` (categoricals one-hot encoded)."""
    if dataset.schema.label is None:
        raise ValueError("dataset has no label column")
    enc = one_hot_encode(dataset)
    X, names = enc.feature_matrix()
    classes = None
    if enc.schema.task.is_classification:
        y, classes = enc.label_ids()
    else:
        y = enc.targets()
    return fit_arrays(family, X, y, enc.schema.task, names, classes,
                      dataset.schema.fingerprint(), **hp)


def encode_instances(model: Model, dataset: Dataset) -> np.ndarray:
    """Feature matrix of ``dataset`` in the column order the model was fit on."""
    enc = one_hot_encode(dataset)
    missing = [f for f in model.feature_names if f not in enc.schema.names]
    if missing:
        raise ValueError(f"dataset lacks model features {missing}")
    return enc.feature_matrix(model.feature_names)[0]


def _as_matrix(model: Model, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.m:
        raise ValueError(f"instances have {X.shape[1]} features, model expects {model.m}")
    return X


def decision_values(model: Model, X) -> np.ndarray:
    """Pre-link scores (linear and GAM families)."""
    if model.family not in ("logistic", "linear", "gam"):
        raise ValueError(f"{model.family} models have no score function")
    return model.estimator.score(_as_matrix(model, X))


def predict_proba(model: Model, X) -> np.ndarray:
    """``n x n_classes`` class probabilities (classification only)."""
    if not model.is_classifier:
        raise ValueError("predict_proba needs a classifier")
    X = _as_matrix(model, X)
    if model.family in ("logistic", "gam"):
        p = model.estimator.predict(X)
        return np.column_stack([1.0 - p, p])
    return model.estimator.proba(X)


def predict_ids(model: Model, X) -> np.ndarray:
    """Class ids for classifiers, real predictions for regressors."""
    X = _as_matrix(model, X)
    if model.family in ("logistic", "gam") and model.is_classifier:
        return (model.estimator.predict(X) > 0.5).astype(int)
    return model.estimator.predict(X)


def true_label_confidence(model: Model, X, y) -> np.ndarray:
    """Probability the model assigns to each row's true class."""
    P = predict_proba(model, X)
    y = np.asarray(y, dtype=int)
    return P[np.arange(len(y)), y]


def predict(model: Model, x) -> Prediction:
    """Predict one instance given as an encoded feature vector of length ``model.m``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != model.m:
        raise ValueError(f"instance has {x.shape[0]} features, model expects {model.m}")
    if not model.is_classifier:
        return Prediction(value=float(predict_ids(model, x)[0]))
    label_id = int(predict_ids(model, x)[0])
    proba = predict_proba(model, x)[0]
    return Prediction(model.classes[label_id], label_id, float(proba[label_id]))


# ---- serialization -------------------------------------------------------

def _estimator_params(model: Model) -> dict:
    e = model.estimator
    if model.family in ("logistic", "linear"):
        return {"theta0": e.theta0, "theta": e.theta.tolist(), "link": e.link}
    if model.family == "gam":
        return {
            "theta0": e.theta0, "link": e.link, "m": e.m,
            "shapes": [{"feature": s.feature, "edges": s.edges.tolist(), "values": s.values.tolist(),
                        "counts": s.counts.tolist()} for s in e.shapes],
            "interactions": [{"features": list(s.features), "edges": [s.edges[0].tolist(), s.edges[1].tolist()],
                              "values": s.values.tolist(), "counts": s.counts.tolist()}
                             for s in e.interactions],
        }
    if model.family == "rules":
        return {
            "default": e.default, "n_classes": e.n_classes, "voting": e.voting,
            "default_counts": None if e.default_counts is None else list(e.default_counts),
            "rules": [{"label": r.label,
                       "class_counts": None if r.class_counts is None else list(r.class_counts),
                       "premises": [[c.feature, c.op, c.value] for c in r.premises]} for r in e.rules],
        }
    if model.family == "tree":
        return {"root": e.root, "n_classes": e.n_classes, "nodes": [nd.to_dict() for nd in e.nodes]}
    return {"k": e.k, "metric": e.metric, "voting": e.voting, "n_classes": e.n_classes,
            "memory_X": e.memory_X.tolist(), "memory_y": e.memory_y.tolist()}


def _estimator_from(family: str, p: dict):
    if family in ("logistic", "linear"):
        return LinearModel(p["theta0"], np.array(p["theta"], dtype=float), p["link"])
    if family == "gam":
        shapes = tuple(ShapeFunction(s["feature"], s["edges"], s["values"], s["counts"]) for s in p["shapes"])
        inter = tuple(InteractionShape(tuple(s["features"]), tuple(s["edges"]), s["values"], s["counts"])
                      for s in p["interactions"])
        return GamModel(p["theta0"], shapes, inter, p["link"], p["m"])
    if family == "rules":
        rules = tuple(Rule(tuple(Condition(f, op, v) for f, op, v in r["premises"]), r["label"],
                           r["class_counts"]) for r in p["rules"])
        dc = p.get("default_counts")
        return RuleSet(rules, p["default"], p["n_classes"], p["voting"], None if dc is None else tuple(dc))
    if family == "tree":
        return DecisionTree(tuple(Node.from_dict(d) for d in p["nodes"]), p["root"], p["n_classes"])
    if family == "knn":
        return InstanceModel(np.array(p["memory_X"], dtype=float), np.array(p["memory_y"], dtype=int),
                             p["k"], p["metric"], p["voting"], p["n_classes"])
    raise ValueError(f"unknown model family {family!r}")


def model_to_dict(model: Model) -> dict:
    return {
        "format": FORMAT_VERSION,
        "family": model.family,
        "schema_fingerprint": model.schema_fingerprint,
        "task": model.task.to_dict(),
        "feature_names": list(model.feature_names),
        "classes": None if model.classes is None else list(model.classes),
        "hyperparams": model.hyperparams,
        "params": _estimator_params(model),
    }


def model_from_dict(d: dict) -> Model:
    if d.get("format") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format {d.get('format')!r}")
    return Model(d["family"], _estimator_from(d["family"], d["params"]), tuple(d["feature_names"]),
                 TaskKind.from_dict(d["task"]), None if d["classes"] is None else tuple(d["classes"]),
                 dict(d["hyperparams"]), d["schema_fingerprint"])


def save_model(model: Model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path) -> Model:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

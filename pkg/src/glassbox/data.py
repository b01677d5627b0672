"""Tabular datasets: schema, ingestion, synthetic generation, encoding and scaling.

A :class:`Dataset` is an immutable column store. Numeric columns are ``float64``
arrays, categorical columns are ``object`` arrays of strings. Every other module
consumes datasets through :meth:`Dataset.feature_matrix` and
:meth:`Dataset.label_ids`.
"""
from __future__ import annotations

import csv
import hashlib
import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


class IngestionError(ValueError):
    """Raised when a CSV or schema file does not conform to its schema."""


class ColumnRole(str, Enum):
    FEATURE = "feature"
    LABEL = "label"
    SENSITIVE = "sensitive"
    QUASI_IDENTIFIER = "quasi_identifier"
    DIRECT_IDENTIFIER = "direct_identifier"
    RESOLVING = "resolving"


NUMERIC = "numeric"
CATEGORICAL = "categorical"

TASK_KINDS = ("regression", "binary_classification", "multiclass_classification", "anomaly_detection")


@dataclass(frozen=True)
class TaskKind:
    """Supervised task. ``n_classes`` is only meaningful for multiclass tasks.

    Anomaly detection is binary classification whose positive class (id 1)
    is the anomaly class.
    """

    kind: str
    n_classes: int | None = None

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.kind == "multiclass_classification":
            if self.n_classes is None or self.n_classes < 2:
                raise ValueError("multiclass_classification needs n_classes >= 2")

    @property
    def is_classification(self) -> bool:
        return self.kind != "regression"

    @property
    def is_binary(self) -> bool:
        return self.kind in ("binary_classification", "anomaly_detection")

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.n_classes is not None:
            out["n_classes"] = self.n_classes
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "TaskKind":
        return cls(d["kind"], d.get("n_classes"))


REGRESSION = TaskKind("regression")
BINARY = TaskKind("binary_classification")


@dataclass(frozen=True)
class Column:
    name: str
    kind: str = NUMERIC
    roles: frozenset = frozenset({ColumnRole.FEATURE})
    # fixed value order for categorical columns; first-appearance order when None
    categories: tuple | None = None

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"column {self.name!r}: unknown kind {self.kind!r}")
        roles = frozenset(ColumnRole(r) for r in self.roles)
        object.__setattr__(self, "roles", roles)
        if self.categories is not None:
            object.__setattr__(self, "categories", tuple(str(c) for c in self.categories))
        if ColumnRole.DIRECT_IDENTIFIER in roles and ColumnRole.FEATURE in roles:
            raise ValueError(f"column {self.name!r}: a direct identifier cannot be a feature")

    def has(self, role: ColumnRole | str) -> bool:
        return ColumnRole(role) in self.roles

    def to_dict(self) -> dict:
        out = {"name": self.name, "kind": self.kind,
               "roles": sorted(r.value for r in self.roles)}
        if self.categories is not None:
            out["categories"] = list(self.categories)
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "Column":
        unknown = set(d) - {"name", "kind", "roles", "categories"}
        if unknown:
            raise IngestionError(f"column {d.get('name')!r}: unknown keys {sorted(unknown)}")
        cats = d.get("categories")
        return cls(d["name"], d.get("kind", NUMERIC), frozenset(d.get("roles", ["feature"])),
                   tuple(cats) if cats is not None else None)


@dataclass(frozen=True)
class Schema:
    columns: tuple
    task: TaskKind | None = None

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ValueError(f"duplicate column names: {sorted(dup)}")
        labels = [c for c in self.columns if c.has(ColumnRole.LABEL)]
        if self.task is not None:
            if len(labels) != 1:
                raise ValueError(f"a supervised schema needs exactly one label column, got {len(labels)}")
            lab = labels[0]
            if self.task.is_classification and lab.kind != CATEGORICAL:
                raise ValueError(f"label {lab.name!r} must be categorical for {self.task.kind}")
            if not self.task.is_classification and lab.kind != NUMERIC:
                raise ValueError(f"label {lab.name!r} must be numeric for regression")
        elif labels:
            raise ValueError("label column declared without a task")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def with_role(self, role: ColumnRole | str) -> list[str]:
        return [c.name for c in self.columns if c.has(role)]

    @property
    def features(self) -> list[str]:
        return self.with_role(ColumnRole.FEATURE)

    @property
    def label(self) -> str | None:
        labels = self.with_role(ColumnRole.LABEL)
        return labels[0] if labels else None

    def to_dict(self) -> dict:
        return {"task": self.task.to_dict() if self.task else None,
                "columns": [c.to_dict() for c in self.columns]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Schema":
        task = d.get("task")
        return cls(tuple(Column.from_dict(c) for c in d["columns"]),
                   TaskKind.from_dict(task) if task else None)

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_schema(path) -> Schema:
    """Read a schema from its JSON document (grammar in the README)."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return Schema.from_dict(doc)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise IngestionError(f"{path}: malformed schema ({exc})") from exc
    except ValueError as exc:
        if isinstance(exc, IngestionError):
            raise
        raise IngestionError(f"{path}: {exc}") from exc


def save_schema(schema: Schema, path) -> None:
    Path(path).write_text(json.dumps(schema.to_dict(), indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable tabular dataset: a schema plus one array per column."""

    schema: Schema
    data: Mapping = field(repr=False)

    def __post_init__(self):
        cols = {}
        n = None
        for c in self.schema.columns:
            if c.name not in self.data:
                raise ValueError(f"missing data for column {c.name!r}")
            v = self.data[c.name]
            v = np.asarray(v, dtype=float) if c.kind == NUMERIC else np.asarray(
                [str(x) for x in v], dtype=object)
            if v.ndim != 1:
                raise ValueError(f"column {c.name!r} must be one-dimensional")
            if n is None:
                n = len(v)
            elif len(v) != n:
                raise ValueError(f"column {c.name!r} has {len(v)} rows, expected {n}")
            if c.kind == NUMERIC and not np.all(np.isfinite(v)):
                raise ValueError(f"column {c.name!r} contains non-finite values")
            cols[c.name] = _freeze(v)
        extra = set(self.data) - set(cols)
        if extra:
            raise ValueError(f"data for undeclared columns {sorted(extra)}")
        object.__setattr__(self, "data", cols)

    @property
    def n(self) -> int:
        return len(next(iter(self.data.values()))) if self.data else 0

    def __len__(self):
        return self.n

    @property
    def m(self) -> int:
        """Feature count after one-hot encoding."""
        return sum(len(self.categories(f)) if self.schema.column(f).kind == CATEGORICAL else 1
                   for f in self.schema.features)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[name]

    def categories(self, name: str) -> tuple:
        col = self.schema.column(name)
        if col.kind != CATEGORICAL:
            raise ValueError(f"column {name!r} is numeric")
        if col.categories is not None:
            return col.categories
        return tuple(dict.fromkeys(self.data[name]))

    def rows(self) -> list[tuple]:
        cols = [self.data[c] for c in self.schema.names]
        return [tuple(v.item() if hasattr(v, "item") else v for v in r) for r in zip(*cols)]

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.schema, {k: v[idx] for k, v in self.data.items()})

    def with_column(self, name: str, values) -> "Dataset":
        data = dict(self.data)
        data[name] = values
        return Dataset(self.schema, data)

    def feature_matrix(self, features: Sequence[str] | None = None) -> tuple[np.ndarray, list[str]]:
        """Numeric ``n x m`` matrix of the feature columns (categoricals must be encoded first)."""
        names = list(features) if features is not None else self.schema.features
        for f in names:
            if self.schema.column(f).kind != NUMERIC:
                raise ValueError(f"feature {f!r} is categorical; call one_hot_encode first")
        if not names:
            return np.zeros((self.n, 0)), []
        return np.column_stack([self.data[f] for f in names]).astype(float), names

    def label_ids(self) -> tuple[np.ndarray, tuple]:
        """Integer class ids and the class names they index (classification)."""
        lab = self.schema.label
        if lab is None or not self.schema.task.is_classification:
            raise ValueError("label_ids needs a classification schema")
        classes = self.categories(lab)
        lookup = {c: i for i, c in enumerate(classes)}
        try:
            ids = np.array([lookup[v] for v in self.data[lab]], dtype=int)
        except KeyError as exc:
            raise ValueError(f"label value {exc.args[0]!r} not among declared categories") from None
        return ids, classes

    def targets(self) -> np.ndarray:
        lab = self.schema.label
        if lab is None:
            raise ValueError("dataset has no label column")
        if self.schema.task.is_classification:
            return self.label_ids()[0]
        return np.asarray(self.data[lab], dtype=float)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.schema.names)
            for row in self.rows():
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def from_arrays(X, y=None, feature_names: Sequence[str] | None = None, label: str = "y",
                classes: Sequence[str] | None = None, task: TaskKind | None = None) -> Dataset:
    """Build a dataset from a numeric matrix and optional targets.

    Integer class ids in ``y`` are mapped onto ``classes`` (default ``"0"``, ``"1"``, ...).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    names = list(feature_names) if feature_names is not None else [f"x{i + 1}" for i in range(X.shape[1])]
    cols = [Column(nm) for nm in names]
    data = {nm: X[:, i] for i, nm in enumerate(names)}
    if y is not None:
        y = np.asarray(y)
        if task is None or task.is_classification:
            ids = y.astype(int)
            if classes is None:
                classes = [str(i) for i in range(int(ids.max()) + 1 if len(ids) else 2)]
            if task is None:
                task = BINARY if len(classes) <= 2 else TaskKind("multiclass_classification", len(classes))
            cols.append(Column(label, CATEGORICAL, frozenset({ColumnRole.LABEL}), tuple(classes)))
            data[label] = [classes[i] for i in ids]
        else:
            cols.append(Column(label, NUMERIC, frozenset({ColumnRole.LABEL})))
            data[label] = y.astype(float)
    return Dataset(Schema(tuple(cols), task), data)


def load_csv(path, schema: Schema) -> Dataset:
    """Parse a CSV whose header matches the schema's column names in any order."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: empty file, no header") from None
        header = [h.strip() for h in header]
        seen = set()
        for h in header:
            if h in seen:
                raise IngestionError(f"{path}: duplicate header column {h!r}")
            seen.add(h)
        expected = set(schema.names)
        unknown = [h for h in header if h not in expected]
        if unknown:
            raise IngestionError(f"{path}: unknown column {unknown[0]!r}")
        missing = [c for c in schema.names if c not in seen]
        if missing:
            raise IngestionError(f"{path}: missing column {missing[0]!r}")
        raw = {h: [] for h in header}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestionError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
            for h, cell in zip(header, row):
                cell = cell.strip()
                if cell == "":
                    raise IngestionError(f"{path}: missing value at row {lineno}, column {h!r}")
                if schema.column(h).kind == NUMERIC:
                    try:
                        val = float(cell)
                    except ValueError:
                        raise IngestionError(
                            f"{path}: unparseable numeric {cell!r} at row {lineno}, column {h!r}") from None
                    if not np.isfinite(val):
                        raise IngestionError(f"{path}: non-finite value at row {lineno}, column {h!r}")
                    raw[h].append(val)
                else:
                    raw[h].append(cell)
    try:
        return Dataset(schema, raw)
    except ValueError as exc:
        raise IngestionError(f"{path}: {exc}") from exc


COVID_FEATURES = ("LungCapacity", "COLevel")
COVID_CLASSES = ("NoCovid", "Covid")
# class-conditional Gaussian means, shared per-axis sd
COVID_MEANS = {"NoCovid": (4.7, 3.0), "Covid": (3.1, 5.5)}
COVID_SD = 0.6


def covid_schema() -> Schema:
    return Schema((
        Column("LungCapacity"),
        Column("COLevel"),
        Column("Covid", CATEGORICAL, frozenset({ColumnRole.LABEL}), COVID_CLASSES),
    ), BINARY)


def generate_covid_toy(n: int, seed: int) -> Dataset:
    """Two-blob synthetic Covid dataset with a 50/50 class split (Covid gets ``n // 2``)."""
    if n < 2:
        raise ValueError(f"generate_covid_toy needs n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    n_pos = n // 2
    labels = np.array([1] * n_pos + [0] * (n - n_pos))
    labels = labels[rng.permutation(n)]
    means = np.array([COVID_MEANS[c] for c in COVID_CLASSES])
    X = means[labels] + rng.normal(0.0, COVID_SD, size=(n, 2))
    return Dataset(covid_schema(), {
        "LungCapacity": X[:, 0],
        "COLevel": X[:, 1],
        "Covid": [COVID_CLASSES[i] for i in labels],
    })


def add_demographics(d: Dataset, seed: int) -> Dataset:
    """Append non-feature columns ``Sex`` (sensitive; ``F`` is protected),
    ``AgeBand`` and ``Zip3`` (quasi-identifiers), drawn independently of the
    features and label."""
    rng = np.random.default_rng([seed, _DEMOGRAPHIC_STREAM])
    sex = rng.choice(["M", "F"], size=d.n)
    age = rng.choice(["18-39", "40-64", "65+"], size=d.n, p=[0.4, 0.4, 0.2])
    zip3 = rng.choice(["100", "101", "102", "103"], size=d.n)
    cols = d.schema.columns + (
        Column("Sex", CATEGORICAL, frozenset({ColumnRole.SENSITIVE}), ("M", "F")),
        Column("AgeBand", CATEGORICAL, frozenset({ColumnRole.QUASI_IDENTIFIER}), ("18-39", "40-64", "65+")),
        Column("Zip3", CATEGORICAL, frozenset({ColumnRole.QUASI_IDENTIFIER}), ("100", "101", "102", "103")),
    )
    data = dict(d.data)
    data.update({"Sex": sex, "AgeBand": age, "Zip3": zip3})
    return Dataset(Schema(cols, d.schema.task), data)


# salts so that one run seed gives independent streams to each random step
_NOISE_STREAM = 1
_SPLIT_STREAM = 2
_DEMOGRAPHIC_STREAM = 3


def add_label_noise(d: Dataset, rate: float, seed: int) -> Dataset:
    """Replace the label of a ``rate`` fraction of rows by a different class, chosen uniformly."""
    if not 0 <= rate <= 1:
        raise ValueError("rate must lie in [0, 1]")
    ids, classes = d.label_ids()
    rng = np.random.default_rng([seed, _NOISE_STREAM])
    flip = rng.permutation(d.n)[: int(round(rate * d.n))]
    ids = ids.copy()
    if len(classes) > 1:
        shift = rng.integers(1, len(classes), size=len(flip))
        ids[flip] = (ids[flip] + shift) % len(classes)
    return d.with_column(d.schema.label, [classes[i] for i in ids])


def one_hot_encode(d: Dataset) -> Dataset:
    """Expand every categorical feature into one 0/1 column per value, named ``col=value``."""
    cols, data = [], {}
    for c in d.schema.columns:
        if c.kind == CATEGORICAL and c.has(ColumnRole.FEATURE):
            values = d[c.name]
            for cat in d.categories(c.name):
                name = f"{c.name}={cat}"
                cols.append(Column(name, NUMERIC, c.roles))
                data[name] = (values == cat).astype(float)
        else:
            cols.append(c)
            data[c.name] = d[c.name]
    if len(cols) == len(d.schema.columns):
        return d
    return Dataset(Schema(tuple(cols), d.schema.task), data)


@dataclass(frozen=True)
class Scaler:
    """Per-column ``(mean, sd)``; ``flagged`` lists constant columns left unscaled."""

    params: Mapping
    flagged: tuple = ()

    def transform(self, d: Dataset) -> Dataset:
        data = dict(d.data)
        for name, (mu, sd) in self.params.items():
            data[name] = (d[name] - mu) / sd
        return Dataset(d.schema, data)

    def inverse(self, d: Dataset) -> Dataset:
        data = dict(d.data)
        for name, (mu, sd) in self.params.items():
            data[name] = d[name] * sd + mu
        return Dataset(d.schema, data)

    def to_dict(self) -> dict:
        return {"params": {k: list(v) for k, v in self.params.items()}, "flagged": list(self.flagged)}


def standardize(d: Dataset) -> tuple[Dataset, Scaler]:
    """Scale numeric features to zero mean and unit population standard deviation.

    Constant columns are passed through unchanged and listed in ``Scaler.flagged``
    (a ``UserWarning`` is also emitted).
    """
    params, flagged = {}, []
    for name in d.schema.features:
        if d.schema.column(name).kind != NUMERIC:
            continue
        v = d[name]
        if len(v) == 0:
            continue
        mu = float(np.mean(v))
        sd = float(np.std(v))
        if sd == 0.0 or not np.isfinite(sd):
            flagged.append(name)
            continue
        params[name] = (mu, sd)
    if flagged:
        warnings.warn(f"constant columns left unscaled: {flagged}", UserWarning, stacklevel=2)
    scaler = Scaler(params, tuple(flagged))
    return scaler.transform(d), scaler


def split(d: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Shuffled train/test partition; the train part holds ``round(train_fraction * n)`` rows.

    Both parts are kept non-empty.
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if d.n < 2:
        raise ValueError("split needs at least two rows")
    rng = np.random.default_rng([seed, _SPLIT_STREAM])
    perm = rng.permutation(d.n)
    n_train = int(np.floor(train_fraction * d.n + 0.5))
    n_train = min(max(n_train, 1), d.n - 1)
    return d.take(np.sort(perm[:n_train])), d.take(np.sort(perm[n_train:]))


def binary_sensitive(d: Dataset, column: str, protected: str | None = None) -> np.ndarray:
    """0/1 array for a binary sensitive column; 1 marks the protected group.

    Numeric columns must already hold 0/1. For categorical columns the protected
    value defaults to the second category.
    """
    col = d.schema.column(column)
    v = d[column]
    if col.kind == NUMERIC:
        if not np.all(np.isin(v, (0.0, 1.0))):
            raise ValueError(f"sensitive column {column!r} must be binary 0/1")
        return v.astype(int)
    cats = d.categories(column)
    if protected is None:
        if len(cats) != 2:
            raise ValueError(f"sensitive column {column!r} has {len(cats)} values; pass protected=")
        protected = cats[1]
    present = set(v)
    if protected not in cats and protected not in present:
        raise ValueError(f"protected value {protected!r} not found in {column!r}")
    if len(present - {protected}) > 1:
        raise ValueError(f"sensitive column {column!r} is not binary")
    return (v == protected).astype(int)


__all__ = [
    "IngestionError", "ColumnRole", "TaskKind", "Column", "Schema", "Dataset", "Scaler",
    "NUMERIC", "CATEGORICAL", "REGRESSION", "BINARY",
    "load_schema", "save_schema", "load_csv", "from_arrays", "generate_covid_toy", "covid_schema",
    "add_label_noise", "add_demographics", "one_hot_encode", "standardize", "split", "binary_sensitive",
    "COVID_FEATURES", "COVID_CLASSES",
]

import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from glassbox.data import (BINARY, CATEGORICAL, COVID_CLASSES, Column, ColumnRole, Dataset, IngestionError,
                           Schema, TaskKind, add_demographics, add_label_noise, binary_sensitive, covid_schema,
                           from_arrays, generate_covid_toy, load_csv, load_schema, one_hot_encode, save_schema,
                           split, standardize)


def test_covid_toy_shape_and_balance():
    d = generate_covid_toy(101, 4)
    ids, classes = d.label_ids()
    assert d.n == 101 and classes == COVID_CLASSES
    assert ids.sum() == 50
    assert d.schema.features == ["LungCapacity", "COLevel"]


def test_covid_toy_deterministic_and_rejects_tiny():
    a, b = generate_covid_toy(50, 9), generate_covid_toy(50, 9)
    assert a.rows() == b.rows()
    with pytest.raises(ValueError):
        generate_covid_toy(1, 0)


def test_covid_toy_geometry():
    d = generate_covid_toy(2000, 0)
    ids, _ = d.label_ids()
    lc = d["LungCapacity"]
    assert lc[ids == 0].mean() > lc[ids == 1].mean()


def test_schema_requires_single_label():
    cols = (Column("a"), Column("y", CATEGORICAL, frozenset({ColumnRole.LABEL})),
            Column("z", CATEGORICAL, frozenset({ColumnRole.LABEL})))
    with pytest.raises(ValueError):
        Schema(cols, BINARY)


def test_schema_roundtrip_and_fingerprint(tmp_path):
    s = covid_schema()
    save_schema(s, tmp_path / "s.json")
    t = load_schema(tmp_path / "s.json")
    assert t == s and t.fingerprint() == s.fingerprint()


def test_direct_identifier_cannot_be_feature():
    with pytest.raises(ValueError):
        Column("id", CATEGORICAL, frozenset({ColumnRole.DIRECT_IDENTIFIER, ColumnRole.FEATURE}))


def test_csv_roundtrip_exact(tmp_path):
    d = generate_covid_toy(30, 2)
    d.to_csv(tmp_path / "d.csv")
    e = load_csv(tmp_path / "d.csv", d.schema)
    assert e.rows() == d.rows()


def test_csv_header_order_insensitive(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("Covid,COLevel,LungCapacity\nCovid,5.0,3.0\nNoCovid,3.0,4.5\n")
    d = load_csv(p, covid_schema())
    assert list(d["LungCapacity"]) == [3.0, 4.5]


@pytest.mark.parametrize("body,fragment", [
    ("LungCapacity,COLevel,Covid\n3.0,,Covid\n", "row 2"),
    ("LungCapacity,COLevel,Covid\n3.0,abc,Covid\n", "COLevel"),
    ("LungCapacity,COLevel\n3.0,1.0\n", "Covid"),
    ("LungCapacity,COLevel,Covid,Extra\n3.0,1.0,Covid,1\n", "Extra"),
    ("LungCapacity,LungCapacity,Covid\n3.0,1.0,Covid\n", "duplicate"),
])
def test_csv_errors_name_location(tmp_path, body, fragment):
    p = tmp_path / "d.csv"
    p.write_text(body)
    with pytest.raises(IngestionError, match=fragment):
        load_csv(p, covid_schema())


def test_one_hot_encoding_expands_categoricals():
    schema = Schema((Column("c", CATEGORICAL, categories=("a", "b", "c")), Column("x"),
                     Column("y", CATEGORICAL, frozenset({ColumnRole.LABEL}), ("0", "1"))), BINARY)
    d = Dataset(schema, {"c": ["a", "c", "b"], "x": [1.0, 2.0, 3.0], "y": ["0", "1", "0"]})
    e = one_hot_encode(d)
    X, names = e.feature_matrix()
    assert names == ["c=a", "c=b", "c=c", "x"]
    assert X.tolist() == [[1, 0, 0, 1], [0, 0, 1, 2], [0, 1, 0, 3]]
    assert d.m == 4


def test_standardize_population_sd_and_flags_constant():
    d = from_arrays(np.array([[1.0, 5.0], [3.0, 5.0]]), [0, 1])
    with pytest.warns(UserWarning):
        s, scaler = standardize(d)
    assert list(s["x1"]) == [-1.0, 1.0]
    assert scaler.flagged == ("x2",)
    assert np.allclose(scaler.inverse(s)["x1"], d["x1"])


def test_split_sizes_and_disjoint():
    d = generate_covid_toy(11, 0)
    tr, te = split(d, 0.7, 1)
    assert (tr.n, te.n) == (8, 3)
    assert set(tr.rows()).isdisjoint(te.rows())


def test_label_noise_rate_and_independence_from_split():
    d = generate_covid_toy(400, 3)
    noisy = add_label_noise(d, 0.2, 3)
    flipped = d.label_ids()[0] != noisy.label_ids()[0]
    assert flipped.sum() == 80
    tr, te = split(noisy, 0.5, 3)
    # with a shared seed the flips must still land on both sides of the split
    te_rows = set(te.rows())
    flipped_rows = [r for r, f in zip(noisy.rows(), flipped) if f]
    assert 0 < sum(r in te_rows for r in flipped_rows) < 80


def test_binary_sensitive_and_demographics():
    d = add_demographics(generate_covid_toy(50, 1), 1)
    s = binary_sensitive(d, "Sex")
    assert set(np.unique(s)) <= {0, 1}
    assert np.array_equal(s, (d["Sex"] == "F").astype(int))
    assert d.schema.with_role("quasi_identifier") == ["AgeBand", "Zip3"]
    assert d.schema.features == ["LungCapacity", "COLevel"]


def test_task_kind_validation():
    assert TaskKind("multiclass_classification", 3).is_classification
    with pytest.raises(ValueError):
        TaskKind("clustering")


@given(st.integers(2, 200), st.integers(0, 10_000), st.floats(0.05, 0.95))
def test_split_partitions_rows(n, seed, frac):
    d = generate_covid_toy(n, seed)
    tr, te = split(d, frac, seed)
    assert tr.n + te.n == n and tr.n >= 1 and te.n >= 1
    assert sorted(tr.rows() + te.rows()) == sorted(d.rows())

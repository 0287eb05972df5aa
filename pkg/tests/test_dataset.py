import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fpcmci.dataset import (DataError, TimeSeriesDataset, load_csv, parse_csv,
                            save_csv, standardize, to_csv)


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_csv_basic(tmp_path):
    rows = "\n".join(f"{i},{2 * i + 0.5}" for i in range(100))
    ds = load_csv(_write(tmp_path, "X,Y\n" + rows + "\n"))
    assert ds.names == ("X", "Y")
    assert ds.T == 100
    assert ds.values[3, 1] == 6.5


def test_non_numeric_cell_names_row_and_column(tmp_path):
    body = "\n".join("1,2" for _ in range(12))
    p = _write(tmp_path, "X,Y\n" + body + "\n3,abc\n")
    with pytest.raises(DataError, match=r"row 14.*'Y'"):
        load_csv(p)


def test_empty_cell_is_missing_value(tmp_path):
    body = "\n".join("1,2" for _ in range(12))
    with pytest.raises(DataError, match="missing value"):
        load_csv(_write(tmp_path, "X,Y\n1,\n" + body + "\n"))


@pytest.mark.parametrize("text, match", [
    ("X,Y\n" + "1,2\n" * 11 + "1\n", "row 13 has 1 fields"),
    ("X,X\n" + "1,2\n" * 12, "duplicate"),
    ("X,\n" + "1,2\n" * 12, "empty variable name"),
    ("X,Y\n" + "1,2\n" * 11 + "1,nan\n", "non-finite"),
    ("X,Y\n" + "1,2\n" * 11 + "inf,1\n", "non-finite"),
    ("X,Y\n" + "1,2\n" * 3, "at least 10"),
])
def test_validation_errors(tmp_path, text, match):
    with pytest.raises(DataError, match=match):
        load_csv(_write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        load_csv(tmp_path / "nope.csv")


def test_dataset_is_read_only():
    ds = TimeSeriesDataset(("a",), np.arange(20.0))
    with pytest.raises(ValueError):
        ds.values[0, 0] = 1.0


def test_standardize_constant_column():
    v = np.column_stack([np.arange(20.0), np.full(20, 5.0)])
    with pytest.raises(DataError, match="zero variance in X"):
        standardize(TimeSeriesDataset(("W", "X"), v))


def test_standardize_fixed_point(rng):
    z = rng.standard_normal(500)
    z = (z - z.mean()) / z.std(ddof=1)
    out = standardize(TimeSeriesDataset(("a",), z))
    np.testing.assert_allclose(out.values[:, 0], z, atol=1e-10)


def test_standardize_ramp_moments_recomputed():
    out = standardize(TimeSeriesDataset(("r",), np.arange(100.0)))
    col = out.values[:, 0]
    # recompute moments by explicit sums
    n = len(col)
    mean = sum(col) / n
    sd = (sum((c - mean) ** 2 for c in col) / (n - 1)) ** 0.5
    assert abs(mean) < 1e-10
    assert abs(sd - 1) < 1e-10
    assert out.names == ("r",) and out.T == 100


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (30, 3), elements=finite))
def test_standardize_idempotent(values):
    if np.any(values.std(axis=0, ddof=1) < 1e-3):
        return
    once = standardize(TimeSeriesDataset(("a", "b", "c"), values))
    twice = standardize(once)
    np.testing.assert_allclose(twice.values, once.values, atol=1e-10, rtol=0)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (12, 2), elements=st.floats(allow_nan=False,
                                                    allow_infinity=False, width=64)))
def test_csv_round_trip(values):
    ds = TimeSeriesDataset(("x1", "x 2"), values)
    assert parse_csv(to_csv(ds)) == ds


def test_save_and_reload(tmp_path, rng):
    ds = TimeSeriesDataset(("A", "B"), rng.standard_normal((50, 2)))
    save_csv(ds, tmp_path / "o.csv")
    assert load_csv(tmp_path / "o.csv") == ds


def test_subset_order():
    ds = TimeSeriesDataset(("a", "b", "c"), np.arange(36.0).reshape(12, 3))
    sub = ds.subset(["c", "a"])
    assert sub.names == ("c", "a")
    np.testing.assert_array_equal(sub.values[:, 0], ds.values[:, 2])

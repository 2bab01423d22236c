import numpy as np
import pandas as pd
from hypothesis import given
from hypothesis import strategies as st

from fedcontinual.data.preprocess import FeatureMatrix
from fedcontinual.data.windows import train_count, window_count, window_task


def matrix(T, d=2, start="2020-01-01"):
    idx = pd.date_range(start, periods=T, freq="h")
    vals = np.column_stack([np.arange(T, dtype=float) * (k + 1) for k in range(d)])
    return FeatureMatrix([f"c{k}" for k in range(d)], vals, idx)


def full_range(m):
    return (m.timestamps[0], m.timestamps[-1] + pd.Timedelta(hours=1))


def test_thirty_rows_give_13_windows_11_2():
    m = matrix(30)
    train, test = window_task(m, full_range(m), 12, 6, "c0")
    assert (len(train), len(test)) == (11, 2)
    assert train.X.shape == (11, 12, 2) and train.Y.shape == (11, 6)


def test_short_segment_is_empty(caplog):
    m = matrix(17)
    train, test = window_task(m, full_range(m), 12, 6, "c0")
    assert len(train) == len(test) == 0
    assert train.X.shape == (0, 12, 2)
    assert "shorter" in caplog.text


def test_y_follows_window():
    m = matrix(18)
    train, test = window_task(m, full_range(m), 12, 6, "c1")
    assert len(train) == 1 and len(test) == 0
    np.testing.assert_array_equal(train.Y[0], m.column("c1")[12:18])
    np.testing.assert_array_equal(train.X[0], m.values[:12])


def test_windows_stay_inside_range():
    m = matrix(100)
    rng = (m.timestamps[20], m.timestamps[50])
    train, test = window_task(m, rng, 5, 3, "c0")
    assert len(train) + len(test) == window_count(30, 5, 3)
    # c0 equals the row number, so inputs and targets reveal which rows were read
    assert train.X[:, :, 0].min() == 20
    assert max(train.Y.max(), test.Y.max()) == 49


def test_input_columns_subset():
    m = matrix(20, d=3)
    train, _ = window_task(m, full_range(m), 4, 2, "c2", input_columns=["c0", "c1"])
    assert train.X.shape[2] == 2


@given(st.integers(0, 80), st.integers(1, 10), st.integers(1, 6))
def test_count_formula_and_split_causality(T, n, p):
    m = matrix(max(T, 1))
    if T == 0:
        return
    train, test = window_task(m, full_range(m), n, p, "c0")
    M = max(0, T - n - p + 1)
    assert len(train) + len(test) == M
    assert len(train) == train_count(M)
    if len(train) and len(test):
        assert train.starts.max() < test.starts.min()


@given(st.integers(0, 10_000))
def test_train_count_is_exact_ceiling(m):
    assert train_count(m) == -(-4 * m // 5)

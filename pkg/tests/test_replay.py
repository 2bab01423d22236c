import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fedcontinual.methods.replay import (
    ReplayBuffer,
    exemplar_count,
    kmeans,
    replay_select,
)

from .conftest import make_dataset
from .oracles import brute_force_kmeans


def windows(values):
    """Scalar 'windows' of shape (M, 1, 1)."""
    v = np.asarray(values, dtype=float)
    return make_dataset(v.reshape(-1, 1, 1), v.reshape(-1, 1))


def test_four_points_two_clusters():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    C, labels = kmeans(X, 2, np.random.default_rng(0))
    np.testing.assert_allclose(np.sort(C[:, 0]), [0.5, 10.5])
    cost, _, want = brute_force_kmeans(X, 2)
    np.testing.assert_allclose(np.sort(C[:, 0]), np.sort(want[:, 0]))
    # ties between 0/1 and 10/11 go to the lower index
    idx = replay_select(windows([0, 1, 10, 11]), 0.5, 0)
    np.testing.assert_array_equal(idx, [0, 2])


def test_ratio_one_selects_everything():
    np.testing.assert_array_equal(replay_select(windows([3, 1, 2]), 1.0, 0), [0, 1, 2])


def test_identical_samples_give_one_exemplar():
    idx = replay_select(windows([4.0] * 6), 0.4, 0)
    assert len(idx) == 1


def test_empty_train_split():
    assert len(replay_select(windows([]), 0.5, 0)) == 0


def test_bad_ratio():
    with pytest.raises(ValueError):
        replay_select(windows([1, 2]), 0.0, 0)
    with pytest.raises(ValueError):
        replay_select(windows([1, 2]), 1.5, 0)


@pytest.mark.parametrize("ratio, m, k", [(0.15, 100, 15), (0.25, 10, 3), (0.05, 3, 1),
                                         (0.15, 10, 2), (0.5, 5, 3)])
def test_exemplar_count_rounds_half_up(ratio, m, k):
    assert exemplar_count(ratio, m) == k


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=30), st.floats(0.01, 1.0),
       st.integers(0, 1000))
def test_exemplars_are_members_and_bounded(values, ratio, seed):
    ds = windows(values)
    idx = replay_select(ds, ratio, seed)
    k = exemplar_count(ratio, len(values))
    assert 1 <= len(idx) <= min(k, len(values))
    assert len(set(idx.tolist())) == len(idx)
    assert np.all((idx >= 0) & (idx < len(values)))
    assert list(idx) == sorted(idx)


@given(st.lists(st.floats(-20, 20), min_size=3, max_size=7, unique=True), st.integers(0, 99))
def test_kmeans_reaches_a_fixed_point(values, seed):
    X = np.array(values)[:, None]
    C, labels = kmeans(X, 2, np.random.default_rng(seed))
    # Lloyd fixed point: every point is nearest its own centroid
    d = np.abs(X - C[:, 0][None, :])
    assert np.all(d[np.arange(len(X)), labels] <= d.min(axis=1) + 1e-12)
    cost = sum(((X[labels == j] - C[j]) ** 2).sum() for j in range(len(C)))
    best, _, _ = brute_force_kmeans(X, 2)
    assert cost >= best - 1e-9


def test_selection_is_seeded():
    ds = windows(np.random.default_rng(0).normal(size=40))
    np.testing.assert_array_equal(replay_select(ds, 0.2, 5), replay_select(ds, 0.2, 5))


def test_buffer_union_and_sampling():
    buf = ReplayBuffer()
    assert len(buf) == 0
    buf.add(1, np.ones((2, 3, 1)), np.ones((2, 1)))
    buf.add(0, np.zeros((3, 3, 1)), np.zeros((3, 1)))
    X, Y = buf.union()
    assert len(buf) == 5 and X[0, 0, 0] == 0.0 and X[-1, 0, 0] == 1.0
    bx, by = buf.sample(np.random.default_rng(0), 10)
    assert len(bx) == 5
    bx, _ = buf.sample(np.random.default_rng(0), 2)
    assert len(bx) == 2
    with pytest.raises(ValueError):
        buf.add(1, np.ones((1, 3, 1)), np.ones((1, 1)))

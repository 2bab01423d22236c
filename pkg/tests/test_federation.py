import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fedcontinual.data.pipeline import TaskData
from fedcontinual.data.windows import WindowedDataset
from fedcontinual.errors import AggregationError, TrainingDivergence
from fedcontinual.evaluation import compute_af, rmse
from fedcontinual.federation import (
    ClientState,
    ServerState,
    TrainSettings,
    evaluate,
    fedavg_aggregate,
    fedavg_weights,
    local_train,
    run_experiment,
    run_phase,
)
from fedcontinual.lstm import LstmSpec, finite_diff_grad, init_params, loss_and_grad, predict
from fedcontinual.methods.strategies import Strategy, make_strategy
from fedcontinual.optim import OptState
from fedcontinual.params import Layout, ParamVector

from .conftest import make_dataset, tiny_task_data


def scalar(v):
    return ParamVector(np.array([float(v)]), Layout.from_shapes([("p", (1,))]))


# aggregation

def test_fedavg_examples():
    assert fedavg_aggregate([(scalar(2.5), 7)]) == scalar(2.5)
    assert fedavg_aggregate([(scalar(1.5), 3), (scalar(1.5), 9)]).data[0] == 1.5
    assert fedavg_aggregate([(scalar(0.0), 1), (scalar(4.0), 3)]).data[0] == 3.0


def test_fedavg_skips_empty_clients():
    assert fedavg_aggregate([(scalar(9.0), 0), (scalar(1.0), 2)]).data[0] == 1.0
    with pytest.raises(AggregationError):
        fedavg_aggregate([(scalar(1.0), 0), (scalar(2.0), 0)])
    other = ParamVector(np.zeros(1), Layout.from_shapes([("q", (1,))]))
    with pytest.raises(AggregationError):
        fedavg_aggregate([(scalar(1.0), 1), (other, 1)])


@given(st.lists(st.integers(1, 10_000), min_size=1, max_size=12))
def test_weights_sum_to_one(counts):
    assert abs(math.fsum(fedavg_weights(counts)) - 1.0) < 1e-12


@given(st.lists(st.tuples(st.floats(-100, 100), st.integers(1, 50)), min_size=1, max_size=8))
def test_fedavg_is_a_convex_combination(updates):
    out = fedavg_aggregate([(scalar(v), n) for v, n in updates]).data[0]
    vals = [v for v, _ in updates]
    assert min(vals) - 1e-9 <= out <= max(vals) + 1e-9
    n = sum(c for _, c in updates)
    assert out == pytest.approx(sum(v * c / n for v, c in updates), abs=1e-9)


# local training

def one_client(tiny_data, k=0, opt=None):
    return ClientState(k, tiny_data.splits[k], opt=opt or OptState())


def test_zero_learning_rate_keeps_theta(tiny_data, tiny_spec):
    theta = init_params(tiny_spec, 0)
    for name in ("sgd", "adam"):
        c = one_client(tiny_data, opt=OptState(name, lr=0.0))
        res = local_train(c, theta, make_strategy("Naive"), tiny_spec, 0, 0, 0, batch_size=8)
        assert res.theta == theta
        assert res.n_samples == len(c.train_split(0))


def test_single_batch_sgd_step(tiny_spec):
    rng = np.random.default_rng(0)
    X, Y = rng.normal(size=(5, 4, tiny_spec.input_dim)), rng.normal(size=(5, 2))
    ds = make_dataset(X, Y)
    c = ClientState(0, [(ds, ds)], opt=OptState("sgd", lr=0.05))
    theta = init_params(tiny_spec, 1)
    res = local_train(c, theta, make_strategy("Naive"), tiny_spec, 0, 0, 0, batch_size=64)
    fd = finite_diff_grad(tiny_spec, theta, X, Y)
    np.testing.assert_allclose(res.theta.data, theta.data - 0.05 * fd.data, atol=1e-10)
    g = loss_and_grad(tiny_spec, theta, X, Y).grad
    np.testing.assert_allclose(res.theta.data, theta.data - 0.05 * g.data, atol=1e-15)


def test_empty_split_is_skipped(tiny_spec):
    empty = make_dataset(np.zeros((0, 4, tiny_spec.input_dim)), np.zeros((0, 2)))
    c = ClientState(0, [(empty, empty)])
    theta = init_params(tiny_spec, 0)
    res = local_train(c, theta, make_strategy("Naive"), tiny_spec, 0, 0, 0)
    assert res.n_samples == 0 and res.theta == theta and res.steps == 0


def test_one_pass_per_epoch(tiny_data, tiny_spec):
    c = one_client(tiny_data)
    M = len(c.train_split(1))
    res = local_train(c, init_params(tiny_spec, 0), make_strategy("Naive"), tiny_spec, 1, 0, 0,
                      batch_size=7, epochs=2)
    assert res.steps == 2 * math.ceil(M / 7)


def test_divergence_carries_location(tiny_spec):
    X = np.zeros((3, 4, tiny_spec.input_dim))
    ds = make_dataset(X, np.full((3, 2), np.inf))
    c = ClientState(4, [(ds, ds)])
    with pytest.raises(TrainingDivergence) as info:
        local_train(c, init_params(tiny_spec, 0), make_strategy("Naive"), tiny_spec, 0, 3, 0)
    assert info.value.task == 0 and info.value.round == 3 and info.value.client == 4


# phases

class Recorder(Strategy):
    def __init__(self):
        super().__init__()
        self.events = []

    def before_task(self, state, task_index, spec, theta):
        self.events.append(("before", task_index))

    def after_task(self, state, task_index, spec, theta, train, rng):
        self.events.append(("after", task_index))


def test_zero_rounds_still_fires_hooks(tiny_data, tiny_spec):
    theta = init_params(tiny_spec, 0)
    server = ServerState(theta.copy())
    rec = Recorder()
    clients = [one_client(tiny_data, k) for k in range(2)]
    reports = run_phase(server, clients, rec, tiny_spec, 1, 0, TrainSettings(), 0)
    assert reports == [] and server.theta == theta
    assert rec.events == [("before", 1), ("before", 1), ("after", 1), ("after", 1)]


def test_single_client_round_is_local_training(tiny_data, tiny_spec):
    theta = init_params(tiny_spec, 0)
    server = ServerState(theta.copy())
    run_phase(server, [one_client(tiny_data)], make_strategy("Naive"), tiny_spec, 0, 1,
              TrainSettings(batch_size=16), seed=3)
    direct = local_train(one_client(tiny_data), theta, make_strategy("Naive"), tiny_spec, 0, 0,
                         3, batch_size=16)
    assert server.theta == direct.theta


def test_identical_clients_aggregate_to_either_update(tiny_data, tiny_spec):
    theta = init_params(tiny_spec, 0)
    split = tiny_data.splits[0]
    clients = [ClientState(k, split, stream_key=0) for k in range(2)]
    server = ServerState(theta.copy())
    run_phase(server, clients, make_strategy("Naive"), tiny_spec, 0, 1,
              TrainSettings(batch_size=16), seed=1)
    assert server.theta == clients[0].theta == clients[1].theta


def test_round_report_weighted_loss(tiny_data, tiny_spec):
    server = ServerState(init_params(tiny_spec, 0))
    clients = [one_client(tiny_data, k) for k in range(2)]
    (rep,) = run_phase(server, clients, make_strategy("Naive"), tiny_spec, 0, 1,
                       TrainSettings(batch_size=16), 0)
    n = sum(rep.client_samples.values())
    want = sum(rep.client_samples[k] / n * rep.client_losses[k] for k in rep.client_samples)
    assert rep.weighted_loss == pytest.approx(want, rel=1e-12)
    assert rep.cpu_seconds >= 0 and len(rep.theta_digest) == 16
    assert '"phase": 0' in rep.to_json()


# evaluation and experiments

def test_pooled_rmse(tiny_data, tiny_spec):
    theta = init_params(tiny_spec, 0)
    clients = [one_client(tiny_data, k) for k in range(2)]
    preds = np.concatenate([predict(tiny_spec, theta, c.test_split(1).X) for c in clients])
    ys = np.concatenate([c.test_split(1).Y for c in clients])
    assert evaluate(tiny_spec, theta, clients, 1) == pytest.approx(rmse(preds, ys), rel=1e-14)


def test_missing_test_windows_give_nan(tiny_spec, caplog):
    empty = make_dataset(np.zeros((0, 4, tiny_spec.input_dim)), np.zeros((0, 2)))
    c = ClientState(0, [(empty, empty)])
    assert math.isnan(evaluate(tiny_spec, init_params(tiny_spec, 0), [c], 0))
    assert "no test windows" in caplog.text


def test_single_task_af_is_null():
    data = tiny_task_data(n_tasks=1)
    spec = LstmSpec(data.input_dim, 3, horizon=2, lag=4)
    res = run_experiment(data, make_strategy("Naive"), spec,
                         TrainSettings(base_rounds=1, task_rounds=1, batch_size=32), 0)
    assert res.P.N == 1 and compute_af(res.P) is None


def test_same_seed_same_matrix_regardless_of_threads(tiny_data, tiny_spec):
    settings = dict(base_rounds=2, task_rounds=2, batch_size=16)
    a = run_experiment(tiny_data, make_strategy("SI"), tiny_spec,
                       TrainSettings(threads=1, **settings), 5)
    b = run_experiment(tiny_data, make_strategy("SI"), tiny_spec,
                       TrainSettings(threads=4, **settings), 5)
    assert a.P.to_csv() == b.P.to_csv()
    assert [r.theta_digest for r in a.reports] == [r.theta_digest for r in b.reports]
    c = run_experiment(tiny_data, make_strategy("SI"), tiny_spec,
                       TrainSettings(threads=1, **settings), 6)
    assert c.P.to_csv() != a.P.to_csv()


def test_upper_triangle_optional(tiny_data, tiny_spec):
    res = run_experiment(tiny_data, make_strategy("Naive"), tiny_spec,
                         TrainSettings(base_rounds=1, task_rounds=1, batch_size=32,
                                       evaluate_all=False), 0)
    assert np.isnan(res.P.entries[0, 1]) and not np.isnan(res.P.entries[1, 0])
    assert compute_af(res.P) is not None


def test_input_dim_mismatch(tiny_data):
    with pytest.raises(ValueError):
        run_experiment(tiny_data, make_strategy("Naive"), LstmSpec(99, 2, horizon=2, lag=4),
                       TrainSettings(base_rounds=0, task_rounds=0), 0)


# data isolation

class Tracked(np.ndarray):
    """Array that logs every read into a shared journal under its owner tag."""

    journal: list = []

    def __new__(cls, arr, owner):
        obj = np.asarray(arr).view(cls)
        obj.owner = owner
        return obj

    def __array_finalize__(self, obj):
        self.owner = getattr(obj, "owner", None)

    def __getitem__(self, item):
        Tracked.journal.append((Tracked.current, self.owner))
        return np.asarray(super().__getitem__(item))

    current = None


def test_clients_read_only_their_own_partition(tiny_data, tiny_spec):
    def tag(ds, k, t):
        return WindowedDataset(Tracked(ds.X, (k, t)), Tracked(ds.Y, (k, t)), k, t, ds.split)

    splits = [[(tag(tr, k, t), tag(te, k, t)) for t, (tr, te) in enumerate(per)]
              for k, per in enumerate(tiny_data.splits)]
    data = TaskData(splits, tiny_data.input_columns, tiny_data.scaler, tiny_data.target)

    import fedcontinual.federation as fed

    original = fed.local_train

    def spying(client, theta, strategy, spec, task_index, *args, **kw):
        Tracked.current = (client.client_id, task_index)
        try:
            return original(client, theta, strategy, spec, task_index, *args, **kw)
        finally:
            Tracked.current = None

    Tracked.journal = []
    fed.local_train = spying
    try:
        run_experiment(data, make_strategy("Replay"), tiny_spec,
                       TrainSettings(base_rounds=2, task_rounds=2, batch_size=16), 0)
    finally:
        fed.local_train = original
    training_reads = [(who, owner) for who, owner in Tracked.journal if who is not None]
    assert training_reads
    for who, owner in training_reads:
        assert who == owner

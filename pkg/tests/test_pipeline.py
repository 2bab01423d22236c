import numpy as np
import pytest

from fedcontinual.data.pipeline import prepare_tasks
from fedcontinual.data.schedule import ScheduleConfig, build_schedule
from fedcontinual.data.synth import SynthConfig, synth_generate


@pytest.fixture(scope="module")
def task_data():
    series = synth_generate(SynthConfig(n_clients=3, n_days=40, missing_rate=0.02), 0)
    sched = build_schedule(ScheduleConfig(start="2013-03-01", base_end=None, base_days=20,
                                          n_tasks=2, season_days=10))
    return prepare_tasks(series, sched, "TEMP", lag=12, horizon=6,
                         features=["TEMP", "PM2.5"])


def test_shapes(task_data):
    assert task_data.n_clients == 3
    assert task_data.n_tasks == 2
    assert task_data.input_columns[:2] == ["TEMP", "PM2.5"]
    assert task_data.input_dim == len(task_data.input_columns) == 8
    train, test = task_data.splits[0][1]
    M = 10 * 24 - 12 - 6 + 1
    assert len(train) + len(test) == M
    assert train.X.shape[1:] == (12, 8) and train.Y.shape[1] == 6


def test_no_missing_values(task_data):
    for per_client in task_data.splits:
        for train, test in per_client:
            assert np.isfinite(train.X).all() and np.isfinite(test.Y).all()


def test_target_can_be_excluded():
    series = synth_generate(SynthConfig(n_clients=1, n_days=12), 0)
    sched = build_schedule(ScheduleConfig(start="2013-03-01", base_end=None, base_days=6,
                                          n_tasks=1, season_days=6))
    data = prepare_tasks(series, sched, "TEMP", features=["TEMP", "DEWP"],
                         include_target_as_feature=False)
    assert "TEMP" not in data.input_columns
    assert data.splits[0][0][0].Y.shape[1] == 6


def test_splits_are_tagged(task_data):
    train, test = task_data.splits[2][1]
    assert (train.client_id, train.task_index, train.split) == (2, 1, "train")
    assert test.split == "test"

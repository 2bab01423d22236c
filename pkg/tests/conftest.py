import numpy as np
import pandas as pd
import pytest
from hypothesis import settings

from fedcontinual.data.ingest import RawSeries
from fedcontinual.data.windows import WindowedDataset
from fedcontinual.lstm import LstmSpec, init_params

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def small_spec():
    return LstmSpec(input_dim=3, hidden_dim=4, num_layers=1, horizon=2, lag=5)


@pytest.fixture
def small_theta(small_spec):
    return init_params(small_spec, 0)


def make_series(columns: dict, start="2020-01-01", station="s0", wd=None) -> RawSeries:
    n = len(next(iter(columns.values())))
    index = pd.date_range(start, periods=n, freq="h", name="timestamp")
    frame = pd.DataFrame({k: np.asarray(v, dtype=np.float64) for k, v in columns.items()},
                         index=index)
    if wd is not None:
        frame["wd"] = np.array(wd, dtype=object)
    return RawSeries(station, frame, tuple(columns), ("wd",) if wd is not None else ())


def make_dataset(X, Y, client_id=0, task_index=0, split="train") -> WindowedDataset:
    return WindowedDataset(np.asarray(X, dtype=np.float64), np.asarray(Y, dtype=np.float64),
                           client_id, task_index, split)


def tiny_task_data(n_clients=2, n_tasks=2, seed=0, noise=0.2):
    from fedcontinual.data.pipeline import prepare_tasks
    from fedcontinual.data.schedule import ScheduleConfig, build_schedule
    from fedcontinual.data.synth import SynthConfig, synth_generate

    series = synth_generate(SynthConfig(n_clients=n_clients, n_days=4 + 2 * n_tasks,
                                        noise=noise, season_period_days=8), seed)
    sched = build_schedule(ScheduleConfig(start="2013-03-01", base_end=None, base_days=4,
                                          n_tasks=n_tasks, season_days=2))
    return prepare_tasks(series, sched, "TEMP", lag=4, horizon=2, features=["TEMP", "DEWP"])


@pytest.fixture(scope="session")
def tiny_data():
    return tiny_task_data()


@pytest.fixture
def tiny_spec(tiny_data):
    return LstmSpec(tiny_data.input_dim, 4, horizon=2, lag=4)


def tiny_raw_config(**overrides) -> dict:
    """A config small enough that a full run takes well under a second."""
    raw = {
        "data": {"source": "synthetic", "synthetic_seed": 0,
                 "synthetic": {"n_clients": 2, "n_days": 8, "noise": 0.2,
                               "season_period_days": 8},
                 "features": ["TEMP", "DEWP"]},
        "schedule": {"start": "2013-03-01", "base_end": None, "base_days": 4,
                     "n_tasks": 2, "season_days": 2},
        "model": {"hidden_dim": 4, "lag": 4, "horizon": 2},
        "training": {"base_rounds": 2, "task_rounds": 2, "batch_size": 16},
        "targets": ["TEMP"],
        "methods": ["Naive"],
        "hyperparameters": {"replay_ratio": 0.2, "lambda_replay": 0.5},
        "seeds": [1],
    }
    raw.update(overrides)
    return raw


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])

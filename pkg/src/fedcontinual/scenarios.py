"""Small constructed window datasets for probing forgetting behaviour.

These skip the CSV pipeline entirely: inputs are i.i.d. standard normal
windows and targets are a fixed linear read-out of the last time step, so
the "right answer" for every task is known.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .data.pipeline import TaskData
from .data.windows import WindowedDataset


def _task(rng: np.random.Generator, n: int, lag: int, dim: int, horizon: int,
          sign: float, noise: float, client: int, task: int, split: str) -> WindowedDataset:
    X = rng.standard_normal((n, lag, dim))
    signal = X[:, -1, :].mean(axis=1, keepdims=True)
    Y = sign * np.repeat(signal, horizon, axis=1) + noise * rng.standard_normal((n, horizon))
    return WindowedDataset(X, Y, client, task, split)


def linear_tasks(signs: Sequence[float], noises: Sequence[float], *, n_clients: int = 2,
                 n_train: Sequence[int] | int = 200, n_test: int = 100, lag: int = 4,
                 dim: int = 2, horizon: int = 1, seed: int = 0) -> TaskData:
    """One entry of ``signs``/``noises`` per task, the first being the base.

    Task ``i`` maps a window to ``signs[i] * mean(last row) + noises[i] * eps``.
    """
    if len(signs) != len(noises) or len(signs) < 2:
        raise ValueError("need matching signs and noises for the base and >= 1 task")
    sizes = [n_train] * len(signs) if isinstance(n_train, int) else list(n_train)
    rng = np.random.default_rng(seed)
    splits = []
    for k in range(n_clients):
        per_client = []
        for i, (sign, noise) in enumerate(zip(signs, noises)):
            per_client.append((_task(rng, sizes[i], lag, dim, horizon, sign, noise, k, i, "train"),
                               _task(rng, n_test, lag, dim, horizon, sign, noise, k, i, "test")))
        splits.append(per_client)
    return TaskData(splits, [f"x{c}" for c in range(dim)], None, "y")


def conflicting_tasks(**kw) -> TaskData:
    """Base and task 1 share a mapping; task 2 flips its sign."""
    return linear_tasks([1.0, 1.0, -1.0], [0.05, 0.05, 0.05], **kw)


def noisier_copy_tasks(noise: float = 0.05, noisier: float = 0.5, **kw) -> TaskData:
    """Task 2 is task 1's mapping with extra target noise."""
    return linear_tasks([1.0, 1.0, 1.0], [noise, noise, noisier], **kw)


__all__ = ["linear_tasks", "conflicting_tasks", "noisier_copy_tasks"]

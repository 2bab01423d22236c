"""Lagged supervised windows with a chronological train/test split."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import pandas as pd

from .preprocess import FeatureMatrix

logger = logging.getLogger(__name__)


@dataclass
class WindowedDataset:
    X: np.ndarray  # (M, n, d)
    Y: np.ndarray  # (M, p)
    client_id: int = 0
    task_index: int = 0
    split: str = "train"
    # timestamp of each window's first input row
    starts: pd.DatetimeIndex | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.X)

    def subset(self, idx) -> "WindowedDataset":
        starts = None if self.starts is None else self.starts[idx]
        return WindowedDataset(self.X[idx], self.Y[idx], self.client_id, self.task_index,
                               self.split, starts)


def window_count(t_segment: int, lag: int, horizon: int) -> int:
    return max(0, t_segment - lag - horizon + 1)


def train_count(m: int, train_fraction: float = 0.8) -> int:
    """ceil(fraction * m) in exact rational arithmetic."""
    frac = Fraction(str(train_fraction))
    return -(-m * frac.numerator // frac.denominator)


def window_task(matrix: FeatureMatrix, time_range: tuple, lag: int, horizon: int, target: str,
                *, input_columns: Sequence[str] | None = None, train_fraction: float = 0.8,
                client_id: int = 0, task_index: int = 0
                ) -> tuple[WindowedDataset, WindowedDataset]:
    """Windows drawn only from rows inside ``[start, end)``.

    Window ``m`` takes input rows ``m .. m+lag-1`` and predicts the target at
    rows ``m+lag .. m+lag+horizon-1``. The first ``ceil(0.8 M)`` windows
    train, the rest test.
    """
    if lag < 1 or horizon < 1:
        raise ValueError("lag and horizon must be >= 1")
    seg = matrix.rows_between(*time_range)
    if input_columns is not None:
        inputs = seg.select(input_columns).values
    else:
        inputs = seg.values
    tgt = seg.column(target)
    T, d = inputs.shape
    M = window_count(T, lag, horizon)
    if M == 0:
        logger.warning(
            "client %s task %s: segment of %d rows is shorter than lag+horizon=%d; no windows",
            client_id, task_index, T, lag + horizon,
        )
        empty = lambda split: WindowedDataset(  # noqa: E731
            np.zeros((0, lag, d)), np.zeros((0, horizon)), client_id, task_index, split,
            seg.timestamps[:0],
        )
        return empty("train"), empty("test")

    X = np.lib.stride_tricks.sliding_window_view(inputs, lag, axis=0)[:M]
    X = np.ascontiguousarray(X.transpose(0, 2, 1))
    Y = np.ascontiguousarray(np.lib.stride_tricks.sliding_window_view(tgt[lag:], horizon)[:M])
    starts = seg.timestamps[:M]
    n_train = train_count(M, train_fraction)
    train = WindowedDataset(X[:n_train], Y[:n_train], client_id, task_index, "train",
                            starts[:n_train])
    test = WindowedDataset(X[n_train:], Y[n_train:], client_id, task_index, "test",
                           starts[n_train:])
    return train, test

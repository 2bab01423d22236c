"""Raw station series to per-client, per-task windowed datasets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .ingest import RawSeries
from .preprocess import ScalerParams, apply_scaler, encode_features, fit_scaler, impute
from .schedule import TaskSchedule
from .windows import WindowedDataset, window_task


@dataclass
class TaskData:
    """``splits[k][i]`` is client ``k``'s (train, test) pair for task ``i``; task 0 is the base."""

    splits: list[list[tuple[WindowedDataset, WindowedDataset]]]
    input_columns: list[str]
    scaler: ScalerParams | None
    target: str

    @property
    def n_clients(self) -> int:
        return len(self.splits)

    @property
    def n_tasks(self) -> int:
        """Continual tasks, excluding the base."""
        return len(self.splits[0]) - 1 if self.splits else 0

    @property
    def input_dim(self) -> int:
        return len(self.input_columns)


def prepare_tasks(series: Sequence[RawSeries], schedule: TaskSchedule, target: str, *,
                  lag: int = 12, horizon: int = 6, features: Sequence[str] | None = None,
                  include_target_as_feature: bool = True, include_season: bool = False,
                  train_fraction: float = 0.8) -> TaskData:
    """Impute, encode, globally scale and window every client's series.

    The scaler is fitted once on all clients' rows inside the schedule span
    (base and tasks). Client ids follow the order of ``series``.
    """
    features = list(series[0].numeric if features is None else features)
    if target not in features:
        features.append(target)
    first, last = schedule.span
    matrices = []
    for s in series:
        s = s.slice(first, last)
        wind = "wd" if "wd" in s.frame else None
        s = impute(s, columns=[*features, *([wind] if wind else [])])
        matrices.append(encode_features(s, features, include_season=include_season,
                                        wind_column=wind))
    scaler = fit_scaler(matrices)
    matrices = [apply_scaler(m, scaler) for m in matrices]

    input_columns = [c for c in matrices[0].columns
                     if include_target_as_feature or c != target]
    splits = []
    for k, m in enumerate(matrices):
        per_task = []
        for i, rng in enumerate(schedule.all_ranges()):
            per_task.append(window_task(m, rng, lag, horizon, target,
                                        input_columns=input_columns,
                                        train_fraction=train_fraction,
                                        client_id=k, task_index=i))
        splits.append(per_task)
    return TaskData(splits, input_columns, scaler, target)

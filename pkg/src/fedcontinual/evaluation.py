"""RMSE, the task-wise performance matrix and the forgetting/plasticity metrics."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)


def rmse(pred: np.ndarray, target: np.ndarray) -> float:
    """Root of the mean squared error over every element."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ValueError("rmse of an empty set is undefined")
    diff = pred - target
    return math.sqrt(float(np.sum(diff * diff)) / diff.size)


@dataclass
class PerformanceMatrix:
    """``entries[i, j]``: RMSE of the model after task i+1 on task j+1's test set.

    Missing entries are NaN; every metric that touches one returns None.
    """

    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.float64)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError("performance matrix must be square")
        if self.N < 1:
            raise ValueError("performance matrix needs N >= 1")
        present = self.entries[~np.isnan(self.entries)]
        if np.any(present < 0) or not np.all(np.isfinite(present)):
            raise ValueError("RMSE entries must be finite and nonnegative")

    @classmethod
    def empty(cls, n: int) -> "PerformanceMatrix":
        return cls(np.full((n, n), np.nan))

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries).copy()

    def final_row(self) -> np.ndarray:
        return self.entries[-1].copy()

    def scaled(self, factor: float) -> "PerformanceMatrix":
        return PerformanceMatrix(self.entries * factor)

    def to_csv(self) -> str:
        """``model_after_task,test_task,rmse`` with 1-based task indices."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model_after_task", "test_task", "rmse"])
        for i in range(self.N):
            for j in range(self.N):
                v = self.entries[i, j]
                w.writerow([i + 1, j + 1, "" if np.isnan(v) else repr(float(v))])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def read_csv(cls, path: str | Path) -> "PerformanceMatrix":
        rows = list(csv.DictReader(Path(path).read_text(encoding="utf-8").splitlines()))
        n = max(int(r["model_after_task"]) for r in rows)
        P = cls.empty(n)
        for r in rows:
            if r["rmse"] != "":
                P.entries[int(r["model_after_task"]) - 1, int(r["test_task"]) - 1] = float(r["rmse"])
        return P


def _mean_or_none(values: np.ndarray) -> float | None:
    if values.size == 0 or np.any(np.isnan(values)):
        return None
    return float(np.mean(values))


def compute_af(P: PerformanceMatrix) -> float | None:
    """Mean over j < N of (final-row entry minus diagonal entry); None when N = 1."""
    if P.N < 2:
        return None
    j = np.arange(P.N - 1)
    return _mean_or_none(P.entries[-1, j] - P.entries[j, j])


def compute_ap(P: PerformanceMatrix) -> float | None:
    return _mean_or_none(P.diagonal())


def compute_avgperf(P: PerformanceMatrix) -> float | None:
    return _mean_or_none(P.final_row())


@dataclass
class MetricsReport:
    method: str
    target: str
    seed: int
    AF: float | None
    AP: float | None
    AvgPerf: float | None
    cpu_seconds: float = 0.0

    @classmethod
    def from_matrix(cls, P: PerformanceMatrix, method: str, target: str, seed: int,
                    cpu_seconds: float = 0.0) -> "MetricsReport":
        return cls(method, target, seed, compute_af(P), compute_ap(P), compute_avgperf(P),
                   cpu_seconds)

    def to_dict(self) -> dict:
        return {"method": self.method, "target": self.target, "seed": self.seed,
                "AF": self.AF, "AP": self.AP, "AvgPerf": self.AvgPerf,
                "cpu_seconds": self.cpu_seconds}


METRIC_NAMES = ("AF", "AP", "AvgPerf", "cpu_seconds")


@dataclass
class TrialAggregate:
    method: str
    target: str
    n_trials: int
    stats: dict[str, dict[str, float | None]] = field(default_factory=dict)

    def mean(self, metric: str) -> float | None:
        return self.stats[metric]["mean"]

    def std(self, metric: str) -> float | None:
        return self.stats[metric]["std"]


def aggregate_trials(reports: Sequence[MetricsReport]) -> TrialAggregate:
    """Per-metric mean and sample (n-1) standard deviation; std is 0 for one trial."""
    if not reports:
        raise ValueError("aggregate_trials needs at least one report")
    cells = {(r.method, r.target) for r in reports}
    if len(cells) > 1:
        raise ValueError(f"reports span several (method, target) cells: {sorted(cells)}")
    stats = {}
    for name in METRIC_NAMES:
        values = [getattr(r, name) for r in reports]
        if any(v is None for v in values):
            stats[name] = {"mean": None, "std": None}
            continue
        arr = np.array(values, dtype=np.float64)
        std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
        stats[name] = {"mean": float(arr.mean()), "std": std}
    return TrialAggregate(reports[0].method, reports[0].target, len(reports), stats)


class CpuTimer:
    """Process CPU time (user + system, all threads) spent inside ``with`` blocks."""

    def __init__(self):
        self.seconds = 0.0

    @contextmanager
    def measure(self) -> Iterator["CpuTimer"]:
        start = time.process_time()
        try:
            yield self
        finally:
            self.seconds += max(0.0, time.process_time() - start)


@contextmanager
def cpu_timer() -> Iterator[CpuTimer]:
    timer = CpuTimer()
    with timer.measure():
        yield timer


def write_metrics_json(path: str | Path, report: MetricsReport,
                       aggregate: TrialAggregate | None = None) -> None:
    payload = report.to_dict()
    if aggregate is not None:
        payload["aggregate"] = aggregate.stats
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")

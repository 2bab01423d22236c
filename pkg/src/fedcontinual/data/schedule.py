"""Base task plus chronological seasonal tasks."""

from __future__ import annotations

from dataclasses import dataclass

import pandas as pd

from ..errors import ScheduleError

# first month of each meteorological season
SEASON_START_MONTHS = (3, 6, 9, 12)
SEASON_NAMES = {3: "Spring", 6: "Summer", 9: "Fall", 12: "Winter"}


@dataclass(frozen=True)
class ScheduleConfig:
    """How to cut the timeline into tasks.

    ``season_days=None`` uses calendar meteorological seasons (Mar-May,
    Jun-Aug, Sep-Nov, Dec-Feb); an integer gives fixed-length seasons.
    ``base_end`` wins over ``base_days`` when both are set.
    """

    start: str = "2013-03-01"
    base_end: str | None = "2014-03-01"
    base_days: int | None = None
    n_tasks: int = 11
    season_days: int | None = None


@dataclass(frozen=True)
class TaskSchedule:
    base_range: tuple[pd.Timestamp, pd.Timestamp]
    task_ranges: tuple[tuple[pd.Timestamp, pd.Timestamp], ...]
    task_names: tuple[str, ...] = ()

    def __post_init__(self):
        ranges = self.all_ranges()
        for start, end in ranges:
            if not start < end:
                raise ScheduleError(f"empty or inverted range [{start}, {end})")
        for (_, prev_end), (start, _) in zip(ranges, ranges[1:]):
            if start < prev_end:
                raise ScheduleError(f"range starting {start} overlaps the previous one")

    @property
    def n_tasks(self) -> int:
        return len(self.task_ranges)

    def all_ranges(self) -> list[tuple[pd.Timestamp, pd.Timestamp]]:
        """Base range first, then tasks 1..N."""
        return [self.base_range, *self.task_ranges]

    @property
    def span(self) -> tuple[pd.Timestamp, pd.Timestamp]:
        return self.base_range[0], self.task_ranges[-1][1] if self.task_ranges else self.base_range[1]


def _next_season_start(ts: pd.Timestamp) -> pd.Timestamp:
    for year in (ts.year, ts.year + 1):
        for month in SEASON_START_MONTHS:
            cand = pd.Timestamp(year=year, month=month, day=1)
            if cand >= ts:
                return cand
    raise AssertionError("unreachable")


def build_schedule(config: ScheduleConfig,
                   data_span: tuple[pd.Timestamp, pd.Timestamp] | None = None) -> TaskSchedule:
    """Base range followed by ``n_tasks`` consecutive seasons.

    ``data_span`` is ``(first timestamp, end-exclusive timestamp)`` of the
    available data; ranges reaching past it raise ScheduleError.
    """
    if config.n_tasks < 1:
        raise ScheduleError("n_tasks must be >= 1")
    start = pd.Timestamp(config.start)
    if config.base_end is not None:
        base_end = pd.Timestamp(config.base_end)
    elif config.base_days is not None:
        base_end = start + pd.Timedelta(days=config.base_days)
    else:
        raise ScheduleError("schedule needs base_end or base_days")

    tasks = []
    names = []
    if config.season_days is None:
        cursor = _next_season_start(base_end)
        for _ in range(config.n_tasks):
            month = cursor.month
            nxt = cursor + pd.DateOffset(months=3)
            year = cursor.year if month != 12 else f"{cursor.year}/{cursor.year + 1}"
            names.append(f"{SEASON_NAMES[month]} {year}")
            tasks.append((cursor, pd.Timestamp(nxt)))
            cursor = pd.Timestamp(nxt)
    else:
        if config.season_days < 1:
            raise ScheduleError("season_days must be >= 1")
        step = pd.Timedelta(days=config.season_days)
        cursor = base_end
        for k in range(config.n_tasks):
            tasks.append((cursor, cursor + step))
            names.append(f"T{k + 1}")
            cursor = cursor + step

    schedule = TaskSchedule((start, base_end), tuple(tasks), tuple(names))
    if data_span is not None:
        lo, hi = pd.Timestamp(data_span[0]), pd.Timestamp(data_span[1])
        first, last = schedule.span
        if first < lo or last > hi:
            raise ScheduleError(
                f"schedule [{first}, {last}) exceeds available data [{lo}, {hi})"
            )
    return schedule

"""Imputation, cyclical encoding and robust percentile scaling."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import pandas as pd

from ..errors import DegenerateScaleError, EncodingError, ImputationError
from .ingest import RawSeries

logger = logging.getLogger(__name__)

COMPASS_POINTS = (
    "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE",
    "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW",
)
# degrees clockwise from north
COMPASS_DEGREES = {name: 22.5 * k for k, name in enumerate(COMPASS_POINTS)}

# meteorological seasons: Mar-May=0, Jun-Aug=1, Sep-Nov=2, Dec-Feb=3
_SEASON_OF_MONTH = {12: 3, 1: 3, 2: 3, 3: 0, 4: 0, 5: 0, 6: 1, 7: 1, 8: 1, 9: 2, 10: 2, 11: 2}


def impute(series: RawSeries, columns: Sequence[str] | None = None) -> RawSeries:
    """Forward fill then backward fill each column.

    Raises ImputationError for a column with no observed value at all.
    """
    frame = series.frame.copy()
    columns = list(frame.columns) if columns is None else list(columns)
    for col in columns:
        s = frame[col]
        if s.isna().all():
            raise ImputationError(col)
        filled = s.ffill().bfill()
        if filled.dtype == object:
            filled = filled.astype(object)
        frame[col] = filled
    return RawSeries(series.station_id, frame, series.numeric, series.categorical)


@dataclass
class FeatureMatrix:
    columns: list[str]
    values: np.ndarray
    timestamps: pd.DatetimeIndex
    station_id: str = ""
    target_column: str | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.timestamps), len(self.columns)):
            raise ValueError(
                f"values of shape {self.values.shape} do not match "
                f"{len(self.timestamps)} timestamps x {len(self.columns)} columns"
            )

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def cyclical_pairs(self) -> list[tuple[str, str]]:
        return [(c, c[:-4] + "_cos") for c in self.columns
                if c.endswith("_sin") and c[:-4] + "_cos" in self.columns]

    def select(self, columns: Sequence[str]) -> "FeatureMatrix":
        idx = [self.columns.index(c) for c in columns]
        return replace(self, columns=list(columns), values=self.values[:, idx])

    def rows_between(self, start, end) -> "FeatureMatrix":
        mask = (self.timestamps >= pd.Timestamp(start)) & (self.timestamps < pd.Timestamp(end))
        return replace(self, values=self.values[mask], timestamps=self.timestamps[mask])


def _cyclic(angle: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.sin(angle), np.cos(angle)


def encode_features(series: RawSeries, numeric: Sequence[str] | None = None,
                    include_season: bool = False, wind_column: str | None = "wd"
                    ) -> FeatureMatrix:
    """Numeric passthrough plus (sin, cos) pairs for hour, weekday and wind direction.

    Columns come out as: the numeric features in the given order, then
    ``hour_sin, hour_cos, dow_sin, dow_cos``, then ``wd_sin, wd_cos`` when a
    wind column is present, then ``season_sin, season_cos`` if requested.
    """
    frame = series.frame
    numeric = list(series.numeric if numeric is None else numeric)
    idx = frame.index
    columns = list(numeric)
    blocks = [frame[numeric].to_numpy(dtype=np.float64)] if numeric else []

    hour = idx.hour.to_numpy(dtype=np.float64)
    dow = idx.dayofweek.to_numpy(dtype=np.float64)
    pairs = [("hour", 2 * np.pi * hour / 24.0), ("dow", 2 * np.pi * dow / 7.0)]

    if wind_column is not None and wind_column in frame:
        tokens = frame[wind_column].to_numpy()
        deg = np.empty(len(tokens))
        for k, tok in enumerate(tokens):
            try:
                deg[k] = COMPASS_DEGREES[tok]
            except KeyError:
                raise EncodingError(
                    f"unknown wind direction {tok!r} at {idx[k]}"
                ) from None
        pairs.append(("wd", np.deg2rad(deg)))
    if include_season:
        season = np.array([_SEASON_OF_MONTH[m] for m in idx.month], dtype=np.float64)
        pairs.append(("season", 2 * np.pi * season / 4.0))

    for name, angle in pairs:
        s, c = _cyclic(angle)
        columns += [f"{name}_sin", f"{name}_cos"]
        blocks.append(np.column_stack([s, c]))

    values = np.concatenate(blocks, axis=1) if blocks else np.zeros((len(idx), 0))
    if np.isnan(values).any():
        raise EncodingError("feature matrix has missing values; impute first")
    return FeatureMatrix(columns, values, idx, series.station_id)


@dataclass(frozen=True)
class ScalerParams:
    columns: tuple[str, ...]
    lo: np.ndarray
    hi: np.ndarray

    def bounds(self, column: str) -> tuple[float, float]:
        k = self.columns.index(column)
        return float(self.lo[k]), float(self.hi[k])

    def inverse(self, column: str, scaled: np.ndarray) -> np.ndarray:
        lo, hi = self.bounds(column)
        return np.asarray(scaled) * (hi - lo) + lo

    def to_dict(self) -> dict:
        return {c: [float(a), float(b)] for c, a, b in zip(self.columns, self.lo, self.hi)}


def fit_scaler(matrices: Sequence[FeatureMatrix], columns: Sequence[str] | None = None
               ) -> ScalerParams:
    """Global 1st/99th percentiles (linear interpolation) over all matrices.

    By default every column except the cyclical (sin, cos) pairs is scaled.
    A constant column raises DegenerateScaleError. A non-constant column
    whose 1st and 99th percentiles coincide falls back to (min, max).
    """
    if not matrices:
        raise ValueError("fit_scaler needs at least one matrix")
    if columns is None:
        cyc = {c for pair in matrices[0].cyclical_pairs() for c in pair}
        columns = [c for c in matrices[0].columns if c not in cyc]
    columns = tuple(columns)
    lo = np.empty(len(columns))
    hi = np.empty(len(columns))
    for k, col in enumerate(columns):
        values = np.concatenate([m.column(col) for m in matrices])
        vmin, vmax = values.min(), values.max()
        if vmin == vmax:
            raise DegenerateScaleError(f"column {col!r} is constant ({vmin}); cannot scale")
        lo[k], hi[k] = np.percentile(values, [1.0, 99.0], method="linear")
        if lo[k] == hi[k]:
            logger.warning("column %r: 1st and 99th percentiles coincide; using min/max", col)
            lo[k], hi[k] = vmin, vmax
    return ScalerParams(columns, lo, hi)


def apply_scaler(matrix: FeatureMatrix, scaler: ScalerParams) -> FeatureMatrix:
    """``(x - lo) / (hi - lo)`` for every scaler column present; no clipping."""
    values = matrix.values.copy()
    for col, lo, hi in zip(scaler.columns, scaler.lo, scaler.hi):
        if col not in matrix.columns:
            continue
        k = matrix.columns.index(col)
        values[:, k] = (values[:, k] - lo) / (hi - lo)
    return replace(matrix, values=values)

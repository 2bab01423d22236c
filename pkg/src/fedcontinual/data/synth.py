"""Seasonal synthetic station data in the same shape as the real CSVs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .ingest import CATEGORICAL_COLUMNS, NUMERIC_COLUMNS, RawSeries
from .preprocess import COMPASS_POINTS


@dataclass(frozen=True)
class FeatureSpec:
    mean: float
    seasonal_amp: float
    daily_amp: float
    noise_scale: float = 1.0
    trend: float = 0.0  # units per day
    nonneg: bool = False


# loosely modelled on Beijing magnitudes
DEFAULT_FEATURES = {
    "PM2.5": FeatureSpec(80.0, -30.0, 15.0, 30.0, nonneg=True),
    "PM10": FeatureSpec(105.0, -30.0, 15.0, 35.0, nonneg=True),
    "SO2": FeatureSpec(15.0, -10.0, 3.0, 5.0, nonneg=True),
    "NO2": FeatureSpec(50.0, -10.0, 10.0, 10.0, nonneg=True),
    "CO": FeatureSpec(1200.0, -500.0, 200.0, 300.0, nonneg=True),
    "O3": FeatureSpec(57.0, 40.0, 25.0, 10.0, nonneg=True),
    "TEMP": FeatureSpec(13.0, 14.0, 5.0, 1.5),
    "PRES": FeatureSpec(1010.0, -10.0, 2.0, 2.0),
    "DEWP": FeatureSpec(3.0, 14.0, 2.0, 2.0),
    "RAIN": FeatureSpec(0.06, 0.1, 0.0, 0.3, nonneg=True),
    "WSPM": FeatureSpec(1.7, 0.5, 0.6, 0.8, nonneg=True),
}


@dataclass(frozen=True)
class SynthConfig:
    """Shape of the generated data.

    Each feature is ``mean + client_offset + trend * day
    + seasonal_amp * sin(2 pi day / season_period + phase)
    + daily_amp * sin(2 pi (hour - 6) / 24) + noise * noise_scale * N(0, 1)``.
    Per-client ``phase_offsets`` shift only the seasonal component, and
    ``client_offsets`` are in units of each feature's ``noise_scale``.
    """

    n_clients: int = 2
    n_days: int = 280
    start: str = "2013-03-01"
    noise: float = 0.1
    season_period_days: float = 365.25
    phase_offsets: tuple[float, ...] = ()
    client_offsets: tuple[float, ...] = ()
    missing_rate: float = 0.0
    features: dict[str, FeatureSpec] = field(default_factory=lambda: dict(DEFAULT_FEATURES))


def synth_generate(config: SynthConfig, seed: int) -> list[RawSeries]:
    rng = np.random.default_rng(seed)
    hours = config.n_days * 24
    index = pd.date_range(pd.Timestamp(config.start), periods=hours, freq="h", name="timestamp")
    t_hours = np.arange(hours, dtype=np.float64)
    day = t_hours / 24.0
    hour_of_day = index.hour.to_numpy(dtype=np.float64)
    daily = np.sin(2 * np.pi * (hour_of_day - 6.0) / 24.0)

    out = []
    for k in range(config.n_clients):
        phase = config.phase_offsets[k] if k < len(config.phase_offsets) else 0.0
        offset = config.client_offsets[k] if k < len(config.client_offsets) else 0.0
        seasonal = np.sin(2 * np.pi * day / config.season_period_days + phase)
        data = {}
        for name in NUMERIC_COLUMNS:
            spec = config.features.get(name)
            if spec is None:
                data[name] = np.full(hours, np.nan)
                continue
            values = (spec.mean + offset * spec.noise_scale + spec.trend * day
                      + spec.seasonal_amp * seasonal + spec.daily_amp * daily)
            if config.noise > 0:
                values = values + config.noise * spec.noise_scale * rng.standard_normal(hours)
            if spec.nonneg:
                values = np.maximum(values, 0.0)
            data[name] = values
        # wind direction rotates slowly with the season, jittered by noise
        angle = np.degrees(2 * np.pi * day / config.season_period_days + phase) + 180.0 * daily
        if config.noise > 0:
            angle = angle + 45.0 * config.noise * rng.standard_normal(hours)
        sector = np.round(np.mod(angle, 360.0) / 22.5).astype(int) % 16
        data["wd"] = np.array([COMPASS_POINTS[s] for s in sector], dtype=object)

        frame = pd.DataFrame(data, index=index)
        if config.missing_rate > 0:
            for name in (*NUMERIC_COLUMNS, *CATEGORICAL_COLUMNS):
                if name in config.features or name in CATEGORICAL_COLUMNS:
                    drop = rng.random(hours) < config.missing_rate
                    if name in CATEGORICAL_COLUMNS:
                        frame.loc[drop, name] = None
                    else:
                        frame.loc[drop, name] = np.nan
        out.append(RawSeries(f"synth{k:02d}", frame))
    return out

"""Reading and writing per-station hourly CSV files."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ..errors import IngestionError

logger = logging.getLogger(__name__)

NUMERIC_COLUMNS = (
    "PM2.5", "PM10", "SO2", "NO2", "CO", "O3", "TEMP", "PRES", "DEWP", "RAIN", "WSPM",
)
CATEGORICAL_COLUMNS = ("wd",)
TIME_COLUMNS = ("year", "month", "day", "hour")
CSV_HEADER = ("No", *TIME_COLUMNS, *NUMERIC_COLUMNS, *CATEGORICAL_COLUMNS, "station")
MISSING_TOKENS = ("", "NA")


@dataclass(frozen=True)
class CsvSchema:
    numeric: tuple[str, ...] = NUMERIC_COLUMNS
    categorical: tuple[str, ...] = CATEGORICAL_COLUMNS
    # None accepts any station name
    stations: tuple[str, ...] | None = None


@dataclass
class RawSeries:
    """One station's hourly series.

    ``frame`` is indexed by an hourly ``DatetimeIndex`` with no gaps. Numeric
    columns are float64 with NaN for missing; categorical columns are object
    dtype with None for missing.
    """

    station_id: str
    frame: pd.DataFrame
    numeric: tuple[str, ...] = field(default=NUMERIC_COLUMNS)
    categorical: tuple[str, ...] = field(default=CATEGORICAL_COLUMNS)

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def timestamps(self) -> pd.DatetimeIndex:
        return self.frame.index

    def slice(self, start, end) -> "RawSeries":
        idx = self.frame.index
        mask = (idx >= pd.Timestamp(start)) & (idx < pd.Timestamp(end))
        return RawSeries(self.station_id, self.frame.loc[mask].copy(), self.numeric,
                         self.categorical)


def regularize(frame: pd.DataFrame) -> pd.DataFrame:
    """Reindex onto a gap-free hourly grid; inserted rows are all-missing."""
    if len(frame) == 0:
        return frame
    grid = pd.date_range(frame.index[0], frame.index[-1], freq="h", name="timestamp")
    out = frame.reindex(grid)
    for col in out.columns:
        if out[col].dtype == object:
            out[col] = out[col].astype(object).where(out[col].notna(), None)
    return out


def ingest_csv(path: str | Path, schema: CsvSchema = CsvSchema()) -> RawSeries:
    """Load one station file and regularize it to an hourly grid.

    Errors name the 1-based line number in the file (the header is line 1).
    """
    path = Path(path)
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    raw.columns = [c.strip() for c in raw.columns]
    required = (*TIME_COLUMNS, *schema.numeric, *schema.categorical, "station")
    missing_cols = [c for c in required if c not in raw.columns]
    if missing_cols:
        raise IngestionError(f"{path.name}: header lacks columns {missing_cols}", row=1)

    raw = raw.apply(lambda s: s.str.strip())
    line_of = lambda i: int(i) + 2  # noqa: E731

    stations = raw["station"].unique().tolist()
    for i, name in raw["station"].items():
        if name in MISSING_TOKENS:
            raise IngestionError("missing station name", row=line_of(i))
        if schema.stations is not None and name not in schema.stations:
            raise IngestionError(f"unknown station {name!r}", row=line_of(i))
    if len(stations) > 1:
        first_other = raw.index[raw["station"] != stations[0]][0]
        raise IngestionError(
            f"file mixes stations {stations[0]!r} and {raw.at[first_other, 'station']!r}",
            row=line_of(first_other),
        )

    parts = {}
    for col in TIME_COLUMNS:
        values = pd.to_numeric(raw[col], errors="coerce")
        bad = values.isna() | (values != values.round())
        if bad.any():
            i = bad.idxmax()
            raise IngestionError(f"malformed timestamp field {col}={raw.at[i, col]!r}",
                                 row=line_of(i))
        parts[col] = values.astype(np.int64)
    stamps = pd.to_datetime(pd.DataFrame(parts), errors="coerce")
    if stamps.isna().any():
        i = stamps.isna().idxmax()
        fields = "-".join(str(raw.at[i, c]) for c in TIME_COLUMNS)
        raise IngestionError(f"malformed timestamp {fields}", row=line_of(i))
    steps = stamps.diff().iloc[1:]
    if (steps <= pd.Timedelta(0)).any():
        i = steps.index[(steps <= pd.Timedelta(0)).to_numpy()][0]
        raise IngestionError("timestamps not strictly increasing", row=line_of(i))
    if ((stamps - stamps.dt.floor("h")) != pd.Timedelta(0)).any():
        raise IngestionError("timestamps must fall on whole hours")

    data = {}
    for col in schema.numeric:
        text = raw[col]
        is_missing = text.isin(MISSING_TOKENS)
        values = pd.to_numeric(text.where(~is_missing), errors="coerce")
        bad = values.isna() & ~is_missing
        if bad.any():
            i = bad.idxmax()
            raise IngestionError(f"non-numeric value {text.at[i]!r} in column {col}",
                                 row=line_of(i))
        data[col] = values.astype(np.float64).to_numpy()
    for col in schema.categorical:
        text = raw[col]
        data[col] = np.array([None if t in MISSING_TOKENS else t for t in text], dtype=object)

    frame = pd.DataFrame(data, index=pd.DatetimeIndex(stamps.to_numpy(), name="timestamp"))
    before = len(frame)
    frame = regularize(frame)
    if len(frame) > before:
        logger.info("%s: inserted %d gap rows", path.name, len(frame) - before)
    return RawSeries(str(stations[0]) if stations else path.stem, frame,
                     tuple(schema.numeric), tuple(schema.categorical))


def ingest_dir(directory: str | Path, schema: CsvSchema = CsvSchema()) -> list[RawSeries]:
    """All ``*.csv`` files in a directory, ordered by station name."""
    files = sorted(Path(directory).glob("*.csv"))
    if not files:
        raise IngestionError(f"no CSV files in {directory}")
    series = [ingest_csv(f, schema) for f in files]
    return sorted(series, key=lambda s: s.station_id)


def write_csv(series: RawSeries, path: str | Path) -> None:
    """Write a series in the station CSV layout, missing cells as ``NA``."""
    frame = series.frame
    idx = frame.index
    out = pd.DataFrame({
        "No": np.arange(1, len(frame) + 1),
        "year": idx.year, "month": idx.month, "day": idx.day, "hour": idx.hour,
    })
    for col in NUMERIC_COLUMNS:
        if col in frame:
            out[col] = [("NA" if np.isnan(v) else repr(float(v))) for v in frame[col]]
        else:
            out[col] = "NA"
    for col in CATEGORICAL_COLUMNS:
        if col in frame:
            out[col] = [("NA" if v is None else v) for v in frame[col]]
        else:
            out[col] = "NA"
    out["station"] = series.station_id
    out.to_csv(path, index=False, columns=list(CSV_HEADER), encoding="utf-8")


from .pipeline import TaskData, prepare_tasks
from .ingest import CsvSchema, RawSeries, ingest_csv, ingest_dir, write_csv
from .preprocess import (
    FeatureMatrix,
    ScalerParams,
    apply_scaler,
    encode_features,
    fit_scaler,
    impute,
)
from .schedule import ScheduleConfig, TaskSchedule, build_schedule
from .synth import FeatureSpec, SynthConfig, synth_generate
from .windows import WindowedDataset, window_task

__all__ = [
    "TaskData", "prepare_tasks",
    "CsvSchema", "RawSeries", "ingest_csv", "ingest_dir", "write_csv",
    "FeatureMatrix", "ScalerParams", "apply_scaler", "encode_features", "fit_scaler", "impute",
    "ScheduleConfig", "TaskSchedule", "build_schedule",
    "FeatureSpec", "SynthConfig", "synth_generate",
    "WindowedDataset", "window_task",
]

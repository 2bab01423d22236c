"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid experiment or model configuration."""


class TrainingDivergence(FloatingPointError):
    """A loss or gradient went non-finite during training."""

    def __init__(self, message: str, *, task: int | None = None, round: int | None = None,
                 client: int | None = None):
        self.task = task
        self.round = round
        self.client = client
        where = ", ".join(
            f"{k}={v}" for k, v in (("task", task), ("round", round), ("client", client))
            if v is not None
        )
        super().__init__(f"{message} ({where})" if where else message)


class DataError(ValueError):
    """Base class for ingestion and preprocessing failures."""


class IngestionError(DataError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class ImputationError(DataError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"column {column!r} has no observed values; cannot impute")


class EncodingError(DataError):
    pass


class DegenerateScaleError(DataError):
    pass


class ScheduleError(DataError):
    pass


class AggregationError(RuntimeError):
    pass

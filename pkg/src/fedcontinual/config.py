"""Experiment configuration: YAML in, validated dataclasses out."""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .data.ingest import NUMERIC_COLUMNS
from .data.schedule import ScheduleConfig
from .data.synth import DEFAULT_FEATURES, FeatureSpec, SynthConfig
from .errors import ConfigError
from .methods.strategies import METHODS, MethodParams, canonical_method
from .optim import OptState

PER_TARGET_KEYS = ("lambda_kd", "lambda_si", "lambda_replay", "lambda_ewc", "lambda_oewc",
                   "replay_ratio")
REQUIRED_BY_METHOD = {
    "Static": (),
    "Naive": (),
    "Replay": ("lambda_replay", "replay_ratio"),
    "LwF": ("lambda_kd",),
    "EWC": ("lambda_ewc",),
    "OEWC": ("lambda_oewc", "gamma"),
    "SI": ("lambda_si", "xi"),
}
TARGETS = ("TEMP", "PM2.5", "WSPM")


@dataclass
class DataConfig:
    source: str = "synthetic"
    csv_dir: str | None = None
    synthetic: SynthConfig = field(default_factory=SynthConfig)
    synthetic_seed: int = 0
    features: list[str] | None = None
    include_target_as_feature: bool = True
    include_season: bool = False
    train_fraction: float = 0.8


@dataclass
class ModelConfig:
    hidden_dim: int = 64
    num_layers: int = 1
    lag: int = 12
    horizon: int = 6


@dataclass
class TrainingConfig:
    base_rounds: int = 500
    task_rounds: int = 30
    local_epochs: int = 1
    batch_size: int = 64
    optimizer: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    fisher_batches: int = 32

    def opt_state(self) -> OptState:
        return OptState(self.optimizer, self.lr, self.beta1, self.beta2, self.eps)


@dataclass
class ExperimentConfig:
    data: DataConfig
    schedule: ScheduleConfig
    targets: list[str]
    methods: list[str]
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    # per-target keys hold {target: value}; gamma and xi are scalars
    hyperparameters: dict[str, Any] = field(default_factory=dict)
    seeds: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    output_dir: str = "results"
    threads: int = 1
    report_scale: float = 1000.0

    def method_params(self, method: str, target: str) -> MethodParams:
        method = canonical_method(method)
        hp = self.hyperparameters
        kwargs = {}
        for key in PER_TARGET_KEYS:
            if key in hp:
                kwargs[key] = float(hp[key][target])
        for key in ("gamma", "xi"):
            if key in hp:
                kwargs[key] = float(hp[key])
        return MethodParams(fisher_batches=self.training.fisher_batches,
                            batch_size=self.training.batch_size, **kwargs)


def _reject_unknown(section: str, given: dict, allowed) -> None:
    allowed = set(allowed)
    unknown = sorted(set(given) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(map(str, unknown))}")


def _build(cls, section: str, raw: Any, conv: dict | None = None):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{section} must be a mapping, got {type(raw).__name__}")
    names = {f.name: f for f in fields(cls)}
    _reject_unknown(section, raw, names)
    kwargs = {}
    for key, value in raw.items():
        try:
            kwargs[key] = (conv or {}).get(key, lambda v: v)(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{section}.{key}: {exc}") from None
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from None


def _typed(kind, key: str):
    def conv(v):
        if kind is bool:
            if not isinstance(v, bool):
                raise ValueError(f"expected a boolean, got {v!r}")
            return v
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                raise ValueError(f"expected an integer, got {v!r}")
            return v
        if kind is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValueError(f"expected a number, got {v!r}")
            return float(v)
        if kind is str:
            if not isinstance(v, str):
                raise ValueError(f"expected a string, got {v!r}")
            return v
        return v
    return conv


def _synth(raw: dict) -> SynthConfig:
    raw = dict(raw or {})
    feats = raw.pop("features", None)
    conv = {
        "n_clients": _typed(int, ""), "n_days": _typed(int, ""), "start": lambda v: str(v),
        "noise": _typed(float, ""), "season_period_days": _typed(float, ""),
        "phase_offsets": lambda v: tuple(float(x) for x in v),
        "client_offsets": lambda v: tuple(float(x) for x in v),
        "missing_rate": _typed(float, ""),
    }
    cfg = _build(SynthConfig, "data.synthetic", raw, conv)
    if feats is not None:
        if not isinstance(feats, dict):
            raise ConfigError("data.synthetic.features must map column -> parameters")
        built = dict(DEFAULT_FEATURES)
        for name, spec in feats.items():
            if name not in NUMERIC_COLUMNS:
                raise ConfigError(f"data.synthetic.features: unknown column {name!r}")
            base = asdict(DEFAULT_FEATURES[name])
            _reject_unknown(f"data.synthetic.features.{name}", spec or {}, base)
            base.update(spec or {})
            built[name] = FeatureSpec(**base)
        cfg = SynthConfig(**{**{f.name: getattr(cfg, f.name) for f in fields(SynthConfig)},
                             "features": built})
    return cfg


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at the top level")
    raw = copy.deepcopy(raw)
    top = {f.name for f in fields(ExperimentConfig)}
    _reject_unknown("config", raw, top)
    for key in ("data", "schedule", "targets", "methods"):
        if key not in raw:
            raise ConfigError(f"missing required key: {key}")

    data_raw = dict(raw["data"] or {})
    synth = _synth(data_raw.pop("synthetic", None))
    data = _build(DataConfig, "data", data_raw, {
        "source": _typed(str, ""), "synthetic_seed": _typed(int, ""),
        "include_target_as_feature": _typed(bool, ""), "include_season": _typed(bool, ""),
        "train_fraction": _typed(float, ""),
        "features": lambda v: [str(x) for x in v] if v is not None else None,
    })
    data.synthetic = synth
    if data.source not in ("csv", "synthetic"):
        raise ConfigError(f"data.source must be 'csv' or 'synthetic', got {data.source!r}")
    if data.source == "csv" and not data.csv_dir:
        raise ConfigError("missing required key: data.csv_dir (data.source is 'csv')")
    if data.features is not None:
        bad = [f for f in data.features if f not in NUMERIC_COLUMNS]
        if bad:
            raise ConfigError(f"data.features: unknown column(s) {bad}")
    if not 0.0 < data.train_fraction < 1.0:
        raise ConfigError("data.train_fraction must be in (0, 1)")

    schedule = _build(ScheduleConfig, "schedule", raw["schedule"], {
        "start": lambda v: str(v),
        "base_end": lambda v: None if v is None else str(v),
        "base_days": lambda v: None if v is None else _typed(int, "")(v),
        "n_tasks": _typed(int, ""),
        "season_days": lambda v: None if v is None else _typed(int, "")(v),
    })
    model = _build(ModelConfig, "model", raw.get("model"), {
        k: _typed(int, "") for k in ("hidden_dim", "num_layers", "lag", "horizon")})
    training = _build(TrainingConfig, "training", raw.get("training"), {
        **{k: _typed(int, "") for k in ("base_rounds", "task_rounds", "local_epochs",
                                          "batch_size", "fisher_batches")},
        **{k: _typed(float, "") for k in ("lr", "beta1", "beta2", "eps")},
        "optimizer": _typed(str, ""),
    })
    if training.optimizer not in ("adam", "sgd"):
        raise ConfigError(f"training.optimizer must be 'adam' or 'sgd', got {training.optimizer!r}")
    for key in ("base_rounds", "task_rounds"):
        if getattr(training, key) < 0:
            raise ConfigError(f"training.{key} must be >= 0")
    for key in ("local_epochs", "batch_size", "fisher_batches"):
        if getattr(training, key) < 1:
            raise ConfigError(f"training.{key} must be >= 1")

    targets = raw["targets"]
    if isinstance(targets, str):
        targets = [targets]
    if not targets:
        raise ConfigError("targets must list at least one column")
    for t in targets:
        if t not in NUMERIC_COLUMNS:
            raise ConfigError(f"targets: unknown column {t!r}")
    methods_raw = raw["methods"]
    if isinstance(methods_raw, str):
        methods_raw = [methods_raw]
    if not methods_raw:
        raise ConfigError("methods must list at least one method")
    methods = [canonical_method(m) for m in methods_raw]

    hp_raw = raw.get("hyperparameters") or {}
    _reject_unknown("hyperparameters", hp_raw, (*PER_TARGET_KEYS, "gamma", "xi"))
    hp: dict[str, Any] = {}
    for key, value in hp_raw.items():
        if key in PER_TARGET_KEYS:
            if isinstance(value, dict):
                per = {}
                for t, v in value.items():
                    per[str(t)] = _typed(float, "")(v) if v is not None else None
                hp[key] = per
            else:
                try:
                    hp[key] = {t: _typed(float, "")(value) for t in targets}
                except ValueError as exc:
                    raise ConfigError(f"hyperparameters.{key}: {exc}") from None
        else:
            try:
                hp[key] = _typed(float, "")(value)
            except ValueError as exc:
                raise ConfigError(f"hyperparameters.{key}: {exc}") from None
    for m in methods:
        for key in REQUIRED_BY_METHOD[m]:
            if key not in hp:
                raise ConfigError(f"missing required key: hyperparameters.{key} (method {m})")
            if key in PER_TARGET_KEYS:
                for t in targets:
                    if hp[key].get(t) is None:
                        raise ConfigError(
                            f"missing required key: hyperparameters.{key}.{t} (method {m})")
    if "gamma" in hp and not 0.0 <= hp["gamma"] <= 1.0:
        raise ConfigError("hyperparameters.gamma must be in [0, 1]")
    if "xi" in hp and hp["xi"] <= 0:
        raise ConfigError("hyperparameters.xi must be > 0")
    if "replay_ratio" in hp:
        for t, r in hp["replay_ratio"].items():
            if r is not None and not 0.0 <= r <= 1.0:
                raise ConfigError(f"hyperparameters.replay_ratio.{t} must be in [0, 1]")

    seeds = raw.get("seeds", [1, 2, 3, 4, 5])
    if not isinstance(seeds, list) or not seeds or not all(
            isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        raise ConfigError("seeds must be a nonempty list of integers")

    cfg = ExperimentConfig(data=data, schedule=schedule, targets=list(targets), methods=methods,
                           model=model, training=training, hyperparameters=hp, seeds=seeds)
    if "output_dir" in raw:
        cfg.output_dir = _typed(str, "")(raw["output_dir"])
    if "threads" in raw:
        cfg.threads = _typed(int, "")(raw["threads"])
        if cfg.threads < 1:
            raise ConfigError("threads must be >= 1")
    if "report_scale" in raw:
        cfg.report_scale = _typed(float, "")(raw["report_scale"])
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Plain-data form with every default spelled out."""
    data = asdict(cfg.data)
    synth = data["synthetic"]
    synth["phase_offsets"] = list(synth["phase_offsets"])
    synth["client_offsets"] = list(synth["client_offsets"])
    return {
        "data": data,
        "schedule": asdict(cfg.schedule),
        "targets": list(cfg.targets),
        "methods": list(cfg.methods),
        "model": asdict(cfg.model),
        "training": asdict(cfg.training),
        "hyperparameters": copy.deepcopy(cfg.hyperparameters),
        "seeds": list(cfg.seeds),
        "output_dir": cfg.output_dir,
        "threads": cfg.threads,
        "report_scale": cfg.report_scale,
    }


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    cfg = config_from_dict(raw)
    if cfg.data.csv_dir and not Path(cfg.data.csv_dir).is_absolute():
        cfg.data.csv_dir = str((path.parent / cfg.data.csv_dir).resolve())
    return cfg


def dump_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=False),
                          encoding="utf-8")


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package (``beijing`` or ``desk``)."""
    path = Path(__file__).parent / "configs" / f"{name}.yaml"
    if not path.exists():
        raise ConfigError(f"no bundled config named {name!r}")
    return path


def set_param(raw: dict, dotted: str, value: Any) -> dict:
    """Copy of a raw config dict with ``dotted`` set; a bare name is looked up
    under ``hyperparameters``."""
    raw = copy.deepcopy(raw)
    parts = dotted.split(".")
    if len(parts) == 1 and parts[0] not in raw:
        parts = ["hyperparameters", parts[0]]
    node = raw
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            raise ConfigError(f"sweep parameter {dotted!r} does not exist in the config")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"sweep parameter {dotted!r} does not exist in the config")
    node[parts[-1]] = value
    return raw


__all__ = ["ExperimentConfig", "DataConfig", "ModelConfig", "TrainingConfig", "METHODS",
           "TARGETS", "config_from_dict", "config_to_dict", "load_config", "dump_config",
           "bundled_config", "set_param"]

"""Federated continual learning for multi-station air-quality forecasting.

A numpy LSTM forecaster trained with FedAvg over a base task and a sequence of
seasonal tasks, with seven continual-learning strategies and the usual
forgetting/plasticity metrics.
"""

from .config import ExperimentConfig, bundled_config, load_config
from .evaluation import (
    MetricsReport,
    PerformanceMatrix,
    aggregate_trials,
    compute_af,
    compute_ap,
    compute_avgperf,
)
from .federation import TrainSettings, fedavg_aggregate, run_experiment
from .lstm import LstmSpec, init_params, loss_and_grad, lstm_forward, predict
from .methods import METHODS, MethodParams, make_strategy
from .params import Layout, ParamVector

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig", "bundled_config", "load_config", "MetricsReport", "PerformanceMatrix",
    "aggregate_trials", "compute_af", "compute_ap", "compute_avgperf", "TrainSettings",
    "fedavg_aggregate", "run_experiment", "LstmSpec", "init_params", "loss_and_grad",
    "lstm_forward", "predict", "METHODS", "MethodParams", "make_strategy", "Layout",
    "ParamVector",
]

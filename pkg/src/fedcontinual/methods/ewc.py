"""Diagonal empirical Fisher, EWC penalty and the online (decayed) variant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data.windows import WindowedDataset
from ..lstm import LstmSpec, loss_and_grad
from ..params import ParamVector
from .penalties import QuadraticAnchor


@dataclass
class FisherInfo:
    F: np.ndarray
    anchor: ParamVector

    def __post_init__(self):
        self.F = np.asarray(self.F, dtype=np.float64)
        if self.F.shape != self.anchor.data.shape:
            raise ValueError("Fisher diagonal and anchor sizes differ")
        if np.any(self.F < 0):
            raise ValueError("Fisher diagonal must be nonnegative")


def fisher_estimate(spec: LstmSpec, theta: ParamVector, dataset: WindowedDataset,
                    batch_size: int = 64, max_batches: int = 32) -> FisherInfo:
    """Mean over consecutive batches of the squared task-MSE gradient."""
    M = len(dataset)
    if M == 0:
        raise ValueError("cannot estimate Fisher information on an empty dataset")
    total = np.zeros_like(theta.data)
    n_batches = 0
    for start in range(0, M, batch_size):
        if n_batches == max_batches:
            break
        g = loss_and_grad(spec, theta, dataset.X[start:start + batch_size],
                          dataset.Y[start:start + batch_size]).grad.data
        total += g * g
        n_batches += 1
    return FisherInfo(total / n_batches, theta.copy())


def ewc_penalty(theta: ParamVector, fisher: FisherInfo, weight: float) -> tuple[float, np.ndarray]:
    return QuadraticAnchor(weight, fisher.F, fisher.anchor).value_and_grad(None, theta)


def oewc_update(old: FisherInfo | None, new_estimate: FisherInfo, gamma: float,
                theta_after_task: ParamVector) -> FisherInfo:
    """``gamma * F_old + (1 - gamma) * F_new`` with the anchor moved to
    ``theta_after_task``. With no previous estimate the new one is taken as is."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    theta_after_task.check_layout(new_estimate.anchor)
    if old is None:
        return FisherInfo(new_estimate.F.copy(), theta_after_task.copy())
    old.anchor.check_layout(new_estimate.anchor)
    return FisherInfo(gamma * old.F + (1.0 - gamma) * new_estimate.F, theta_after_task.copy())

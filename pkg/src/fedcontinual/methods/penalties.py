"""Loss terms added on top of the task MSE.

Each term exposes ``value_and_grad(spec, theta) -> (value, flat_grad)`` and
already includes its weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..lstm import LstmSpec, lstm_forward, mse_residual, output_grad
from ..params import ParamVector
from .replay import ReplayBuffer


@dataclass
class QuadraticAnchor:
    """``weight * sum_i importance_i * (theta_i - anchor_i)^2``."""

    weight: float
    importance: np.ndarray
    anchor: ParamVector
    kind: str = field(default="quadratic-anchor", init=False)

    def __post_init__(self):
        self.importance = np.asarray(self.importance, dtype=np.float64)
        if self.importance.shape != self.anchor.data.shape:
            raise ValueError("importance and anchor sizes differ")
        if np.any(self.importance < 0):
            raise ValueError("importance must be nonnegative")

    def value_and_grad(self, spec: LstmSpec, theta: ParamVector) -> tuple[float, np.ndarray]:
        theta.check_layout(self.anchor)
        diff = theta.data - self.anchor.data
        weighted = self.importance * diff
        return (float(self.weight * np.dot(weighted, diff)),
                (2.0 * self.weight) * weighted)


@dataclass
class TeacherSnapshot:
    theta: ParamVector
    spec: LstmSpec

    def predict(self, batch_x: np.ndarray) -> np.ndarray:
        return lstm_forward(self.spec, self.theta, batch_x)


@dataclass
class Distillation:
    """``weight * mse(f_theta(x), f_teacher(x))`` on a batch of inputs."""

    weight: float
    teacher: TeacherSnapshot
    batch_x: np.ndarray
    kind: str = field(default="distillation", init=False)

    def __post_init__(self):
        self._teacher_pred = self.teacher.predict(self.batch_x)

    def value_and_grad(self, spec: LstmSpec, theta: ParamVector) -> tuple[float, np.ndarray]:
        value, grad, _ = output_grad(spec, theta, self.batch_x,
                                     mse_residual(self._teacher_pred, self.weight))
        return value, grad


@dataclass
class ReplayBatch:
    """``weight * mse(f_theta(x), y)`` on exemplars drawn from the buffer."""

    weight: float
    batch_x: np.ndarray
    batch_y: np.ndarray
    kind: str = field(default="replay-batch", init=False)

    def value_and_grad(self, spec: LstmSpec, theta: ParamVector) -> tuple[float, np.ndarray]:
        if len(self.batch_x) == 0:
            return 0.0, np.zeros_like(theta.data)
        value, grad, _ = output_grad(spec, theta, self.batch_x,
                                     mse_residual(self.batch_y, self.weight))
        return value, grad


def kd_loss(spec: LstmSpec, theta: ParamVector, teacher: TeacherSnapshot,
            batch_x: np.ndarray, weight: float) -> tuple[float, np.ndarray]:
    return Distillation(weight, teacher, batch_x).value_and_grad(spec, theta)


def replay_loss(spec: LstmSpec, theta: ParamVector, buffer: ReplayBuffer, weight: float,
                rng: np.random.Generator, batch_size: int = 64) -> tuple[float, np.ndarray]:
    """Weighted MSE on a uniform draw from the buffer; 0 for an empty buffer."""
    if len(buffer) == 0:
        return 0.0, np.zeros_like(theta.data)
    bx, by = buffer.sample(rng, batch_size)
    return ReplayBatch(weight, bx, by).value_and_grad(spec, theta)

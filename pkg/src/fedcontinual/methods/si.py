"""Synaptic Intelligence: path-integral importance accumulated during training."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..params import ParamVector
from .penalties import QuadraticAnchor


@dataclass
class SIAccumulator:
    W: np.ndarray
    omega: np.ndarray
    theta_task_start: ParamVector
    theta_prev_step: ParamVector
    xi: float = 1e-3
    anchor: ParamVector | None = None

    @classmethod
    def start(cls, theta: ParamVector, xi: float = 1e-3) -> "SIAccumulator":
        if xi <= 0:
            raise ValueError("xi must be positive")
        zeros = np.zeros_like(theta.data)
        return cls(zeros, zeros.copy(), theta.copy(), theta.copy(), xi)

    def begin_task(self, theta: ParamVector) -> None:
        self.theta_task_start = theta.copy()
        self.theta_prev_step = theta.copy()


def si_step(acc: SIAccumulator, grad: ParamVector, theta_before: ParamVector,
            theta_after: ParamVector) -> SIAccumulator:
    """``W += (theta_after - theta_before) * (-grad)`` for one optimizer step."""
    acc.W = acc.W - (theta_after.data - theta_before.data) * grad.data
    acc.theta_prev_step = theta_after
    return acc


def si_consolidate(acc: SIAccumulator, theta_task_end: ParamVector,
                   xi: float | None = None) -> tuple[np.ndarray, ParamVector]:
    """Fold this task's path integral into the running importance.

    ``Omega += max(W, 0) / ((theta_end - theta_start)^2 + xi)``; W resets and
    the anchor moves to ``theta_task_end``.
    """
    xi = acc.xi if xi is None else xi
    if xi <= 0:
        raise ValueError("xi must be positive")
    delta = theta_task_end.data - acc.theta_task_start.data
    acc.omega = acc.omega + np.maximum(acc.W, 0.0) / (delta * delta + xi)
    acc.W = np.zeros_like(acc.W)
    acc.anchor = theta_task_end.copy()
    return acc.omega, acc.anchor


def si_penalty(theta: ParamVector, omega: np.ndarray, anchor: ParamVector,
               weight: float) -> tuple[float, np.ndarray]:
    return QuadraticAnchor(weight, omega, anchor).value_and_grad(None, theta)

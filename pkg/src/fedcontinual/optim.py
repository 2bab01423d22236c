"""Adam and plain SGD over flat parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .params import ParamVector


@dataclass
class OptState:
    name: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.name not in ("adam", "sgd"):
            raise ConfigError(f"unknown optimizer {self.name!r}")

    def fresh(self) -> "OptState":
        """Same hyperparameters, no moment history."""
        return OptState(self.name, self.lr, self.beta1, self.beta2, self.eps)


def optimizer_step(state: OptState, theta: ParamVector, grad: ParamVector) -> ParamVector:
    """Return the updated parameters; moment estimates in ``state`` advance in place."""
    theta.check_layout(grad)
    g = grad.data
    if state.name == "sgd":
        state.step += 1
        return theta.like(theta.data - state.lr * g)

    if state.m is None:
        state.m = np.zeros_like(g)
        state.v = np.zeros_like(g)
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * (g * g)
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    return theta.like(theta.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))

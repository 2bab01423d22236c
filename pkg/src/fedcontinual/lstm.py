"""Numpy LSTM forecaster with hand-written backpropagation through time.

The model is a stack of standard LSTM layers (sigmoid input/forget/output
gates, tanh candidate and cell activation) followed by a linear head that
maps the last hidden state of the top layer to ``horizon`` outputs. Hidden
and cell states start at zero. Gate blocks are stacked in the order
input, forget, candidate, output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .errors import ConfigError, TrainingDivergence
from .params import Layout, ParamVector


@dataclass(frozen=True)
class LstmSpec:
    input_dim: int
    hidden_dim: int = 64
    num_layers: int = 1
    horizon: int = 6
    lag: int = 12

    def __post_init__(self):
        for name in ("input_dim", "hidden_dim", "num_layers", "horizon", "lag"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"LstmSpec.{name} must be >= 1, got {getattr(self, name)}")

    def layout(self) -> Layout:
        h = self.hidden_dim
        shapes = []
        for layer in range(self.num_layers):
            in_dim = self.input_dim if layer == 0 else h
            shapes += [
                (f"lstm{layer}.W_x", (4 * h, in_dim)),
                (f"lstm{layer}.W_h", (4 * h, h)),
                (f"lstm{layer}.b", (4 * h,)),
            ]
        shapes += [("head.W", (self.horizon, h)), ("head.b", (self.horizon,))]
        return Layout.from_shapes(shapes)


@dataclass
class GradResult:
    loss: float
    grad: ParamVector


class PenaltyTerm(Protocol):
    """Anything that adds ``value`` to the loss and ``grad`` to the gradient."""

    def value_and_grad(self, spec: LstmSpec, theta: ParamVector) -> tuple[float, np.ndarray]:
        ...


def init_params(spec: LstmSpec, seed: int | np.random.Generator) -> ParamVector:
    """Uniform(-1/sqrt(h), 1/sqrt(h)) weights, zero biases."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    theta = ParamVector.zeros(spec.layout())
    bound = 1.0 / np.sqrt(spec.hidden_dim)
    for name, view in theta.views():
        if name.endswith(".b"):
            continue
        view[...] = rng.uniform(-bound, bound, size=view.shape)
    return theta


def _check(spec: LstmSpec, theta: ParamVector, batch_x: np.ndarray) -> np.ndarray:
    if theta.layout != spec.layout():
        raise ConfigError("parameter layout does not match the LSTM spec")
    batch_x = np.asarray(batch_x, dtype=np.float64)
    if batch_x.ndim != 3 or batch_x.shape[2] != spec.input_dim:
        raise ConfigError(
            f"expected input of shape (B, n, {spec.input_dim}), got {batch_x.shape}"
        )
    if not np.all(np.isfinite(batch_x)):
        raise ValueError("model inputs contain NaN or Inf")
    return batch_x


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form cannot overflow
    return 0.5 * np.tanh(0.5 * z) + 0.5


def _forward(spec: LstmSpec, theta: ParamVector, batch_x: np.ndarray, keep: bool):
    B, n, _ = batch_x.shape
    h_dim = spec.hidden_dim
    layer_in = batch_x
    caches = []
    for layer in range(spec.num_layers):
        W_x = theta.view(f"lstm{layer}.W_x")
        W_h = theta.view(f"lstm{layer}.W_h")
        b = theta.view(f"lstm{layer}.b")
        zx = layer_in @ W_x.T + b
        h = np.zeros((B, h_dim))
        c = np.zeros((B, h_dim))
        hs = np.empty((B, n, h_dim))
        if keep:
            gates = np.empty((B, n, 4 * h_dim))
            cs = np.empty((B, n + 1, h_dim))
            cs[:, 0] = 0.0
        for t in range(n):
            z = zx[:, t] + h @ W_h.T
            act = _sigmoid(z)
            act[:, 2 * h_dim:3 * h_dim] = np.tanh(z[:, 2 * h_dim:3 * h_dim])
            i = act[:, :h_dim]
            f = act[:, h_dim:2 * h_dim]
            g = act[:, 2 * h_dim:3 * h_dim]
            o = act[:, 3 * h_dim:]
            c = f * c + i * g
            h = o * np.tanh(c)
            hs[:, t] = h
            if keep:
                gates[:, t] = act
                cs[:, t + 1] = c
        if keep:
            caches.append((layer_in, hs, gates, cs))
        layer_in = hs
    h_last = layer_in[:, -1]
    pred = h_last @ theta.view("head.W").T + theta.view("head.b")
    return pred, caches


def lstm_forward(spec: LstmSpec, theta: ParamVector, batch_x: np.ndarray) -> np.ndarray:
    """Predict ``(B, horizon)`` outputs for a ``(B, lag, input_dim)`` batch."""
    batch_x = _check(spec, theta, batch_x)
    pred, _ = _forward(spec, theta, batch_x, keep=False)
    return pred


def predict(spec: LstmSpec, theta: ParamVector, X: np.ndarray, chunk: int = 1024) -> np.ndarray:
    if len(X) == 0:
        return np.zeros((0, spec.horizon))
    parts = [lstm_forward(spec, theta, X[s:s + chunk]) for s in range(0, len(X), chunk)]
    return np.concatenate(parts, axis=0)


def _backward(spec: LstmSpec, theta: ParamVector, caches, dpred: np.ndarray) -> np.ndarray:
    grad = ParamVector.zeros(theta.layout)
    h_dim = spec.hidden_dim
    top_hs = caches[-1][1]
    grad.view("head.W")[...] = dpred.T @ top_hs[:, -1]
    grad.view("head.b")[...] = dpred.sum(axis=0)

    B, n, _ = top_hs.shape
    d_hs = np.zeros((B, n, h_dim))
    d_hs[:, -1] = dpred @ theta.view("head.W")
    for layer in reversed(range(spec.num_layers)):
        layer_in, hs, gates, cs = caches[layer]
        W_x = theta.view(f"lstm{layer}.W_x")
        W_h = theta.view(f"lstm{layer}.W_h")
        dz_all = np.empty((B, n, 4 * h_dim))
        dh_next = np.zeros((B, h_dim))
        dc_next = np.zeros((B, h_dim))
        for t in reversed(range(n)):
            i = gates[:, t, :h_dim]
            f = gates[:, t, h_dim:2 * h_dim]
            g = gates[:, t, 2 * h_dim:3 * h_dim]
            o = gates[:, t, 3 * h_dim:]
            c_prev = cs[:, t]
            tanh_c = np.tanh(cs[:, t + 1])
            dh = d_hs[:, t] + dh_next
            dc = dc_next + dh * o * (1.0 - tanh_c * tanh_c)
            dz = dz_all[:, t]
            dz[:, :h_dim] = dc * g * i * (1.0 - i)
            dz[:, h_dim:2 * h_dim] = dc * c_prev * f * (1.0 - f)
            dz[:, 2 * h_dim:3 * h_dim] = dc * i * (1.0 - g * g)
            dz[:, 3 * h_dim:] = dh * tanh_c * o * (1.0 - o)
            dc_next = dc * f
            dh_next = dz @ W_h
        h_prev = np.concatenate([np.zeros((B, 1, h_dim)), hs[:, :-1]], axis=1)
        dz_flat = dz_all.reshape(B * n, 4 * h_dim)
        grad.view(f"lstm{layer}.W_x")[...] = dz_flat.T @ layer_in.reshape(B * n, -1)
        grad.view(f"lstm{layer}.W_h")[...] = dz_flat.T @ h_prev.reshape(B * n, h_dim)
        grad.view(f"lstm{layer}.b")[...] = dz_flat.sum(axis=0)
        if layer > 0:
            d_hs = dz_all @ W_x
    return grad.data


def output_grad(spec: LstmSpec, theta: ParamVector, batch_x: np.ndarray,
                residual_fn) -> tuple[float, np.ndarray, np.ndarray]:
    """Run forward, let ``residual_fn(pred) -> (value, dvalue/dpred)``, backprop.

    Returns ``(value, grad, pred)``.
    """
    batch_x = _check(spec, theta, batch_x)
    pred, caches = _forward(spec, theta, batch_x, keep=True)
    value, dpred = residual_fn(pred)
    return value, _backward(spec, theta, caches, dpred), pred


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean over rows of the squared L2 distance, i.e. divide by B only."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.sum(diff * diff) / pred.shape[0])


def mse_residual(target: np.ndarray, weight: float = 1.0):
    """Residual function for ``weight * mse_loss(pred, target)``."""
    target = np.asarray(target, dtype=np.float64)

    def fn(pred):
        if pred.shape != target.shape:
            raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
        diff = pred - target
        B = pred.shape[0]
        return weight * float(np.sum(diff * diff) / B), (2.0 * weight / B) * diff

    return fn


def loss_and_grad(spec: LstmSpec, theta: ParamVector, batch_x: np.ndarray,
                  batch_y: np.ndarray, extra_terms: Sequence[PenaltyTerm] = ()) -> GradResult:
    """Task MSE plus every penalty term, with the exact gradient of the total."""
    # non-finite values are caught below and reported as divergence
    with np.errstate(over="ignore", invalid="ignore"):
        loss, grad, _ = output_grad(spec, theta, batch_x, mse_residual(batch_y))
        for term in extra_terms:
            value, g = term.value_and_grad(spec, theta)
            loss += value
            grad = grad + g
    if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
        raise TrainingDivergence("non-finite loss or gradient")
    return GradResult(float(loss), theta.like(grad))


def total_loss(spec: LstmSpec, theta: ParamVector, batch_x: np.ndarray, batch_y: np.ndarray,
               extra_terms: Sequence[PenaltyTerm] = ()) -> float:
    loss = mse_loss(lstm_forward(spec, theta, batch_x), batch_y)
    for term in extra_terms:
        loss += term.value_and_grad(spec, theta)[0]
    return loss


def finite_diff_grad(spec: LstmSpec, theta: ParamVector, batch_x: np.ndarray,
                     batch_y: np.ndarray, eps: float = 1e-5,
                     extra_terms: Sequence[PenaltyTerm] = ()) -> ParamVector:
    """Central-difference gradient of the total loss, one coordinate at a time."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    grad = np.empty_like(theta.data)
    probe = theta.copy()
    for k in range(theta.data.size):
        orig = probe.data[k]
        probe.data[k] = orig + eps
        up = total_loss(spec, probe, batch_x, batch_y, extra_terms)
        probe.data[k] = orig - eps
        down = total_loss(spec, probe, batch_x, batch_y, extra_terms)
        probe.data[k] = orig
        grad[k] = (up - down) / (2.0 * eps)
    return theta.like(grad)

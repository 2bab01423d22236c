"""The seven benchmarked strategies as lifecycle hooks over per-client state.

Task index 0 is the base task. Every strategy trains the base task with the
plain MSE objective; the differences start at task 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data.windows import WindowedDataset
from ..errors import ConfigError
from ..lstm import LstmSpec
from ..params import Layout, ParamVector
from .ewc import FisherInfo, fisher_estimate, oewc_update
from .penalties import Distillation, QuadraticAnchor, ReplayBatch, TeacherSnapshot
from .replay import ReplayBuffer, replay_select
from .si import SIAccumulator, si_consolidate, si_step

METHODS = ("Static", "Naive", "Replay", "LwF", "EWC", "OEWC", "SI")
_ALIASES = {m.lower(): m for m in METHODS}
_ALIASES.update({"kd": "LwF", "o-ewc": "OEWC", "naivecl": "Naive", "naive-cl": "Naive"})


def canonical_method(name: str) -> str:
    try:
        return _ALIASES[str(name).strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown method {name!r}; expected one of {METHODS}") from None


@dataclass
class MethodParams:
    lambda_kd: float = 1.0
    lambda_si: float = 1.0
    lambda_replay: float = 1.0
    lambda_ewc: float = 1.0
    lambda_oewc: float = 1.0
    replay_ratio: float = 0.15
    gamma: float = 0.9
    xi: float = 1e-3
    fisher_batches: int = 32
    batch_size: int = 64


@dataclass
class CLState:
    """Everything one client keeps between tasks for its strategy."""

    buffer: ReplayBuffer = field(default_factory=ReplayBuffer)
    teacher: TeacherSnapshot | None = None
    fisher: FisherInfo | None = None
    si: SIAccumulator | None = None
    fisher_fits: int = 0

    def to_dict(self) -> dict:
        def vec(p: ParamVector | None):
            return None if p is None else p.data.tolist()

        layout = None
        for p in (self.teacher and self.teacher.theta, self.fisher and self.fisher.anchor,
                  self.si and self.si.theta_task_start):
            if p is not None:
                layout = p.layout.to_list()
                break
        out = {
            "layout": layout,
            "buffer": {str(t): {"X": x.tolist(), "Y": y.tolist()}
                       for t, (x, y) in sorted(self.buffer.tasks.items())},
            "teacher": None,
            "fisher": None,
            "si": None,
            "fisher_fits": self.fisher_fits,
        }
        if self.teacher is not None:
            s = self.teacher.spec
            out["teacher"] = {"theta": vec(self.teacher.theta),
                              "spec": [s.input_dim, s.hidden_dim, s.num_layers,
                                       s.horizon, s.lag]}
        if self.fisher is not None:
            out["fisher"] = {"F": self.fisher.F.tolist(), "anchor": vec(self.fisher.anchor)}
        if self.si is not None:
            out["si"] = {"W": self.si.W.tolist(), "omega": self.si.omega.tolist(),
                         "theta_task_start": vec(self.si.theta_task_start),
                         "theta_prev_step": vec(self.si.theta_prev_step),
                         "xi": self.si.xi, "anchor": vec(self.si.anchor)}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "CLState":
        layout = Layout.from_list(d["layout"]) if d.get("layout") else None

        def vec(data):
            return None if data is None else ParamVector(np.array(data, dtype=np.float64), layout)

        state = cls(fisher_fits=int(d.get("fisher_fits", 0)))
        for t, item in d.get("buffer", {}).items():
            state.buffer.add(int(t), np.array(item["X"]), np.array(item["Y"]))
        if d.get("teacher"):
            state.teacher = TeacherSnapshot(vec(d["teacher"]["theta"]),
                                            LstmSpec(*d["teacher"]["spec"]))
        if d.get("fisher"):
            state.fisher = FisherInfo(np.array(d["fisher"]["F"]), vec(d["fisher"]["anchor"]))
        if d.get("si"):
            s = d["si"]
            state.si = SIAccumulator(np.array(s["W"]), np.array(s["omega"]),
                                     vec(s["theta_task_start"]), vec(s["theta_prev_step"]),
                                     float(s["xi"]), vec(s["anchor"]))
        return state

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CLState":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class Strategy:
    """Naive fine-tuning; subclasses override the hooks they need."""

    name = "Naive"

    def __init__(self, params: MethodParams | None = None):
        self.params = params or MethodParams()

    def trains(self, task_index: int) -> bool:
        return True

    def before_task(self, state: CLState, task_index: int, spec: LstmSpec,
                    theta: ParamVector) -> None:
        pass

    def loss_terms(self, state: CLState, task_index: int, spec: LstmSpec,
                   batch_x: np.ndarray, batch_y: np.ndarray, rng: np.random.Generator) -> list:
        return []

    def after_step(self, state: CLState, grad: ParamVector, theta_before: ParamVector,
                   theta_after: ParamVector) -> None:
        pass

    def after_task(self, state: CLState, task_index: int, spec: LstmSpec, theta: ParamVector,
                   train: WindowedDataset, rng: np.random.Generator) -> None:
        pass


class Naive(Strategy):
    name = "Naive"


class Static(Strategy):
    """Base model only; nothing trains after task 0."""

    name = "Static"

    def trains(self, task_index: int) -> bool:
        return task_index == 0


class Replay(Strategy):
    name = "Replay"

    def loss_terms(self, state, task_index, spec, batch_x, batch_y, rng):
        if len(state.buffer) == 0:
            return []
        bx, by = state.buffer.sample(rng, len(batch_x))
        return [ReplayBatch(self.params.lambda_replay, bx, by)]

    def after_task(self, state, task_index, spec, theta, train, rng):
        if self.params.replay_ratio <= 0 or len(train) == 0:
            return
        idx = replay_select(train, self.params.replay_ratio, rng)
        state.buffer.add(task_index, train.X[idx], train.Y[idx])


class LwF(Strategy):
    name = "LwF"

    def before_task(self, state, task_index, spec, theta):
        state.teacher = TeacherSnapshot(theta.copy(), spec) if task_index >= 1 else None

    def loss_terms(self, state, task_index, spec, batch_x, batch_y, rng):
        if state.teacher is None:
            return []
        return [Distillation(self.params.lambda_kd, state.teacher, batch_x)]


class EWC(Strategy):
    """Fisher and anchor fixed once, after the base task."""

    name = "EWC"

    def _weight(self) -> float:
        return self.params.lambda_ewc

    def loss_terms(self, state, task_index, spec, batch_x, batch_y, rng):
        if state.fisher is None:
            return []
        return [QuadraticAnchor(self._weight(), state.fisher.F, state.fisher.anchor)]

    def after_task(self, state, task_index, spec, theta, train, rng):
        if task_index == 0 and len(train):
            state.fisher = fisher_estimate(spec, theta, train, self.params.batch_size,
                                           self.params.fisher_batches)
            state.fisher_fits += 1


class OEWC(EWC):
    """Fisher decayed and re-anchored after every task."""

    name = "OEWC"

    def _weight(self) -> float:
        return self.params.lambda_oewc

    def after_task(self, state, task_index, spec, theta, train, rng):
        if len(train) == 0:
            if state.fisher is not None:
                state.fisher = FisherInfo(state.fisher.F, theta.copy())
            return
        estimate = fisher_estimate(spec, theta, train, self.params.batch_size,
                                   self.params.fisher_batches)
        state.fisher = oewc_update(state.fisher, estimate, self.params.gamma, theta)
        state.fisher_fits += 1


class SI(Strategy):
    name = "SI"

    def before_task(self, state, task_index, spec, theta):
        if state.si is None:
            state.si = SIAccumulator.start(theta, self.params.xi)
        state.si.begin_task(theta)

    def loss_terms(self, state, task_index, spec, batch_x, batch_y, rng):
        if state.si is None or state.si.anchor is None:
            return []
        return [QuadraticAnchor(self.params.lambda_si, state.si.omega, state.si.anchor)]

    def after_step(self, state, grad, theta_before, theta_after):
        si_step(state.si, grad, theta_before, theta_after)

    def after_task(self, state, task_index, spec, theta, train, rng):
        si_consolidate(state.si, theta, self.params.xi)


_REGISTRY = {cls.name: cls for cls in (Static, Naive, Replay, LwF, EWC, OEWC, SI)}


def make_strategy(method: str, params: MethodParams | None = None) -> Strategy:
    return _REGISTRY[canonical_method(method)](params)

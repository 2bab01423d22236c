"""In-process FedAvg simulation over a base task and a sequence of continual tasks.

Every random draw comes from a generator seeded by
``(master seed, client, task, round, stream)``, so results do not depend on
how many threads train clients concurrently. Aggregation always sums in
ascending client-id order.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .data.pipeline import TaskData
from .data.windows import WindowedDataset
from .errors import AggregationError, TrainingDivergence
from .evaluation import CpuTimer, PerformanceMatrix
from .lstm import LstmSpec, init_params, loss_and_grad, predict
from .methods.strategies import CLState, Strategy
from .optim import OptState, optimizer_step
from .params import ParamVector

logger = logging.getLogger(__name__)

# generator stream ids
_SHUFFLE, _REPLAY, _HOOK, _INIT = 0, 1, 2, 3


def stream(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *(int(k) for k in keys)])


def digest(theta: ParamVector) -> str:
    return hashlib.sha256(theta.data.tobytes()).hexdigest()[:16]


@dataclass
class TrainSettings:
    base_rounds: int = 500
    task_rounds: int = 30
    local_epochs: int = 1
    batch_size: int = 64
    optimizer: OptState = field(default_factory=OptState)
    threads: int = 1
    evaluate_all: bool = True


@dataclass
class ClientState:
    client_id: int
    datasets: list[tuple[WindowedDataset, WindowedDataset]]
    cl: CLState = field(default_factory=CLState)
    opt: OptState = field(default_factory=OptState)
    theta: ParamVector | None = None
    # key for this client's random streams; defaults to the client id
    stream_key: int | None = None

    @property
    def key(self) -> int:
        return self.client_id if self.stream_key is None else self.stream_key

    def train_split(self, task_index: int) -> WindowedDataset:
        return self.datasets[task_index][0]

    def test_split(self, task_index: int) -> WindowedDataset:
        return self.datasets[task_index][1]


@dataclass
class ServerState:
    theta: ParamVector
    round: int = 0
    phase: int = 0


@dataclass
class RoundReport:
    phase: int
    round: int
    client_losses: dict[int, float]
    client_samples: dict[int, int]
    weighted_loss: float
    wall_seconds: float
    cpu_seconds: float
    theta_digest: str

    def to_json(self) -> str:
        return json.dumps({
            "phase": self.phase, "round": self.round,
            "client_losses": {str(k): v for k, v in self.client_losses.items()},
            "client_samples": {str(k): v for k, v in self.client_samples.items()},
            "weighted_loss": self.weighted_loss,
            "wall_seconds": self.wall_seconds, "cpu_seconds": self.cpu_seconds,
            "theta_digest": self.theta_digest,
        }, sort_keys=True)


@dataclass
class LocalResult:
    theta: ParamVector
    n_samples: int
    mean_loss: float | None
    steps: int


def local_train(client: ClientState, theta_global: ParamVector, strategy: Strategy,
                spec: LstmSpec, task_index: int, round_index: int, seed: int,
                batch_size: int = 64, epochs: int = 1) -> LocalResult:
    """Start from the global parameters and make ``epochs`` shuffled passes
    over the client's train split for ``task_index``.

    A client with no training windows is skipped and reports ``n_samples=0``.
    """
    train = client.train_split(task_index)
    M = len(train)
    if M == 0:
        return LocalResult(theta_global, 0, None, 0)
    theta = theta_global.copy()
    shuffle = stream(seed, client.key, task_index, round_index, _SHUFFLE)
    replay_rng = stream(seed, client.key, task_index, round_index, _REPLAY)
    losses = []
    for _ in range(epochs):
        order = shuffle.permutation(M)
        for start in range(0, M, batch_size):
            idx = order[start:start + batch_size]
            bx, by = train.X[idx], train.Y[idx]
            terms = strategy.loss_terms(client.cl, task_index, spec, bx, by, replay_rng)
            try:
                res = loss_and_grad(spec, theta, bx, by, terms)
            except TrainingDivergence as exc:
                raise TrainingDivergence(str(exc).split(" (")[0], task=task_index,
                                         round=round_index, client=client.client_id) from exc
            new_theta = optimizer_step(client.opt, theta, res.grad)
            strategy.after_step(client.cl, res.grad, theta, new_theta)
            theta = new_theta
            losses.append(res.loss)
    client.theta = theta
    return LocalResult(theta, M, float(np.mean(losses)), len(losses))


def fedavg_weights(counts: Sequence[int]) -> np.ndarray:
    n = sum(counts)
    if n <= 0:
        raise AggregationError("no client contributed samples this round")
    w = np.array([c / n for c in counts], dtype=np.float64)
    if abs(math.fsum(w) - 1.0) >= 1e-12:
        raise AggregationError(f"aggregation weights sum to {math.fsum(w)!r}")
    return w


def fedavg_aggregate(updates: Sequence[tuple[ParamVector, int]]) -> ParamVector:
    """``sum_k (n_k / n) theta_k`` accumulated in the order given.

    Callers pass updates sorted by client id. Updates with ``n_k = 0`` are
    ignored; if every ``n_k`` is 0 an AggregationError is raised.
    """
    live = [(theta, n) for theta, n in updates if n > 0]
    if not live:
        raise AggregationError("no client contributed samples this round")
    weights = fedavg_weights([n for _, n in live])
    layout = live[0][0].layout
    acc = np.zeros_like(live[0][0].data)
    for (theta, _), w in zip(live, weights):
        if theta.layout != layout:
            raise AggregationError("client updates have different layouts")
        acc += w * theta.data
    return ParamVector(acc, layout)


def _map(threads: int, fn, items):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_phase(server: ServerState, clients: Sequence[ClientState], strategy: Strategy,
              spec: LstmSpec, task_index: int, rounds: int, settings: TrainSettings, seed: int,
              on_round: Callable[[RoundReport], None] | None = None) -> list[RoundReport]:
    """before_task hooks, ``rounds`` FedAvg rounds, then after_task hooks."""
    clients = sorted(clients, key=lambda c: c.client_id)
    server.phase = task_index
    for c in clients:
        strategy.before_task(c.cl, task_index, spec, server.theta)

    reports = []
    if strategy.trains(task_index):
        for r in range(rounds):
            wall0, cpu0 = time.perf_counter(), time.process_time()
            theta_global = server.theta
            results = _map(settings.threads, lambda c: local_train(
                c, theta_global, strategy, spec, task_index, r, seed,
                settings.batch_size, settings.local_epochs), clients)
            server.theta = fedavg_aggregate([(res.theta, res.n_samples) for res in results])
            server.round += 1
            live = {c.client_id: res for c, res in zip(clients, results) if res.n_samples > 0}
            w = fedavg_weights([res.n_samples for res in live.values()])
            report = RoundReport(
                phase=task_index, round=r,
                client_losses={k: res.mean_loss for k, res in live.items()},
                client_samples={k: res.n_samples for k, res in live.items()},
                weighted_loss=float(sum(wk * res.mean_loss for wk, res in zip(w, live.values()))),
                wall_seconds=time.perf_counter() - wall0,
                cpu_seconds=time.process_time() - cpu0,
                theta_digest=digest(server.theta),
            )
            reports.append(report)
            if on_round is not None:
                on_round(report)

    def finish(c: ClientState):
        strategy.after_task(c.cl, task_index, spec, server.theta, c.train_split(task_index),
                            stream(seed, c.key, task_index, 0, _HOOK))

    _map(settings.threads, finish, clients)
    return reports


def evaluate(spec: LstmSpec, theta: ParamVector, clients: Sequence[ClientState],
             task_index: int) -> float:
    """Pooled RMSE over every client's test windows for one task; NaN if none."""
    sse = 0.0
    count = 0
    for c in sorted(clients, key=lambda c: c.client_id):
        test = c.test_split(task_index)
        if len(test) == 0:
            continue
        diff = predict(spec, theta, test.X) - test.Y
        sse += float(np.sum(diff * diff))
        count += diff.size
    if count == 0:
        logger.warning("task %d has no test windows on any client; P entry left missing",
                       task_index)
        return float("nan")
    return math.sqrt(sse / count)


@dataclass
class ExperimentResult:
    P: PerformanceMatrix
    reports: list[RoundReport]
    base_theta: ParamVector
    task_thetas: list[ParamVector]
    cpu_seconds: float
    clients: list[ClientState]


def run_experiment(data: TaskData, strategy: Strategy, spec: LstmSpec,
                   settings: TrainSettings, seed: int,
                   on_round: Callable[[RoundReport], None] | None = None) -> ExperimentResult:
    """Base phase, then each continual task followed by a row of evaluations.

    Row ``i`` of P is filled right after task ``i``; with
    ``settings.evaluate_all`` the entries for not-yet-seen tasks are filled
    too, otherwise they stay missing.
    """
    if spec.input_dim != data.input_dim:
        raise ValueError(f"spec input_dim {spec.input_dim} != data input_dim {data.input_dim}")
    N = data.n_tasks
    timer = CpuTimer()
    with timer.measure():
        clients = [ClientState(k, data.splits[k], opt=settings.optimizer.fresh())
                   for k in range(data.n_clients)]
        server = ServerState(init_params(spec, stream(seed, _INIT)))
        reports = run_phase(server, clients, strategy, spec, 0, settings.base_rounds,
                            settings, seed, on_round)
        base_theta = server.theta.copy()
        P = PerformanceMatrix.empty(N) if N else None
        task_thetas = []
        for i in range(1, N + 1):
            reports += run_phase(server, clients, strategy, spec, i, settings.task_rounds,
                                 settings, seed, on_round)
            task_thetas.append(server.theta.copy())
            cols = range(1, N + 1) if settings.evaluate_all else range(1, i + 1)
            for j in cols:
                P.entries[i - 1, j - 1] = evaluate(spec, server.theta, clients, j)
    return ExperimentResult(P, reports, base_theta, task_thetas, timer.seconds, clients)

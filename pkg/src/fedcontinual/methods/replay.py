"""Exemplar selection by k-means and the per-client replay buffer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..data.windows import WindowedDataset


def kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding. Returns fewer than ``k`` centers if the data run out
    of distinct points."""
    centers = [X[rng.integers(len(X))]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    while len(centers) < k:
        total = d2.sum()
        if total <= 0.0:
            break
        idx = rng.choice(len(X), p=d2 / total)
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(axis=1)[:, None] - 2.0 * X @ C.T + (C * C).sum(axis=1)[None, :]
    return np.maximum(d, 0.0)


def kmeans(X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 100,
           tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm from k-means++ seeds.

    Stops when no centroid moves more than ``tol`` (Euclidean) or after
    ``max_iter`` updates. An empty cluster keeps its previous centroid.
    Returns ``(centroids, labels)``; labels index rows of ``centroids``.
    """
    X = np.asarray(X, dtype=np.float64)
    C = kmeans_pp_init(X, k, rng)
    labels = np.argmin(_sq_dists(X, C), axis=1)
    for _ in range(max_iter):
        new = C.copy()
        for j in range(len(C)):
            members = labels == j
            if members.any():
                new[j] = X[members].mean(axis=0)
        shift = np.sqrt(((new - C) ** 2).sum(axis=1)).max()
        C = new
        labels = np.argmin(_sq_dists(X, C), axis=1)
        if shift <= tol:
            break
    return C, labels


def exemplar_count(ratio: float, m_train: int) -> int:
    # round half up, not Python's banker's rounding
    return max(1, int(math.floor(ratio * m_train + 0.5)))


def replay_select(train: WindowedDataset, ratio: float, seed) -> np.ndarray:
    """Indices of the training windows nearest each k-means centroid.

    ``k = max(1, round(ratio * M))`` clusters over the flattened input
    windows; each nonempty cluster contributes the member closest to its
    centroid (lowest index on ties). Result is sorted ascending.
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"replay ratio must be in (0, 1], got {ratio}")
    M = len(train)
    if M == 0:
        return np.zeros(0, dtype=np.int64)
    k = exemplar_count(ratio, M)
    if k >= M:
        return np.arange(M)
    X = train.X.reshape(M, -1)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    C, labels = kmeans(X, k, rng)
    chosen = []
    for j in range(len(C)):
        members = np.flatnonzero(labels == j)
        if members.size == 0:
            continue
        dist = np.sqrt(((X[members] - C[j]) ** 2).sum(axis=1))
        chosen.append(members[np.argmin(dist)])
    return np.sort(np.array(chosen, dtype=np.int64))


@dataclass
class ReplayBuffer:
    """Exemplars from completed tasks, keyed by task index."""

    tasks: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    _union: tuple[np.ndarray, np.ndarray] | None = field(default=None, init=False, repr=False,
                                                         compare=False)

    def add(self, task_index: int, X: np.ndarray, Y: np.ndarray) -> None:
        if task_index in self.tasks:
            raise ValueError(f"task {task_index} already stored")
        self.tasks[task_index] = (np.array(X, dtype=np.float64), np.array(Y, dtype=np.float64))
        self._union = None

    def __len__(self) -> int:
        return sum(len(x) for x, _ in self.tasks.values())

    def union(self) -> tuple[np.ndarray, np.ndarray]:
        if self._union is None:
            keys = sorted(self.tasks)
            self._union = (np.concatenate([self.tasks[t][0] for t in keys]),
                           np.concatenate([self.tasks[t][1] for t in keys]))
        return self._union

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Uniform draw without replacement; at most ``len(self)`` rows."""
        X, Y = self.union()
        size = min(size, len(X))
        idx = rng.choice(len(X), size=size, replace=False)
        return X[idx], Y[idx]

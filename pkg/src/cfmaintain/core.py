"""Shared domain types: labeled instances, CFE states, the sliding buffer and rng helpers."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional

import numpy as np

from ._validation import as_vector

CLASSES = (0, 1)


class LabeledInstance(NamedTuple):
    x: np.ndarray
    y: int


@dataclass(frozen=True)
class CfeState:
    """One maintained counterfactual explanation.

    ``x0`` is the explained query, ``x_cf`` the current counterfactual and
    ``target`` the desired class. Retirement is absorbing: an inactive state
    is never modified again.
    """

    x0: np.ndarray
    x_cf: np.ndarray
    target: int
    active: bool = True
    uid: int = 0

    def with_cf(self, x_cf: np.ndarray) -> "CfeState":
        return replace(self, x_cf=x_cf)

    def retired(self) -> "CfeState":
        return replace(self, active=False)


class LabeledBuffer:
    """FIFO window over the most recent labeled observations.

    Backed by a ring of numpy arrays so neighbour queries are a single
    vectorised scan. ``X`` and ``y`` are always returned oldest-first.
    """

    def __init__(self, capacity: int = 1000, n_features: Optional[int] = None):
        if int(capacity) < 1:
            raise ValueError(f"capacity must be a positive integer, got {capacity!r}")
        self.capacity = int(capacity)
        self.n_features = n_features
        self._X: Optional[np.ndarray] = None
        self._y = np.zeros(self.capacity, dtype=int)
        self._head = 0  # slot of the oldest entry once full
        self._size = 0
        self.version = 0  # bumped on every push; lets callers cache predictions

    def __len__(self) -> int:
        return self._size

    def push(self, x, y: int) -> "LabeledBuffer":
        x = as_vector(x, self.n_features)
        if self._X is None:
            self.n_features = x.shape[0]
            self._X = np.zeros((self.capacity, self.n_features))
        if self._size < self.capacity:
            slot = self._size
            self._size += 1
        else:
            slot = self._head
            self._head = (self._head + 1) % self.capacity
        self._X[slot] = x
        self._y[slot] = int(y)
        self.version += 1
        return self

    def extend(self, X, y) -> "LabeledBuffer":
        for xi, yi in zip(np.asarray(X, dtype=float), y):
            self.push(xi, yi)
        return self

    def _order(self) -> np.ndarray:
        if self._size < self.capacity:
            return np.arange(self._size)
        return (np.arange(self.capacity) + self._head) % self.capacity

    @property
    def X(self) -> np.ndarray:
        if self._X is None:
            return np.zeros((0, self.n_features or 0))
        return self._X[self._order()]

    @property
    def y(self) -> np.ndarray:
        return self._y[self._order()]

    @property
    def entries(self) -> List[LabeledInstance]:
        return [LabeledInstance(x, int(c)) for x, c in zip(self.X, self.y)]

    def knn_indices(self, q, k: int, mask: Optional[np.ndarray] = None) -> np.ndarray:
        """Indices (into the oldest-first view) of the ``k`` nearest entries.

        Distances are Euclidean; ties go to the older entry because the view
        is oldest-first and the sort is stable.
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k!r}")
        if self._size == 0:
            return np.zeros(0, dtype=int)
        X = self.X
        q = as_vector(q, self.n_features, name="q")
        candidates = np.arange(self._size) if mask is None else np.flatnonzero(mask)
        if candidates.size == 0:
            return candidates
        d2 = np.sum((X[candidates] - q) ** 2, axis=1)
        order = np.argsort(d2, kind="stable")[:k]
        return candidates[order]


def buffer_push(buf: LabeledBuffer, inst: LabeledInstance) -> LabeledBuffer:
    return buf.push(inst.x, inst.y)


def buffer_knn(buf: LabeledBuffer, q, k: int,
               mask: Optional[np.ndarray] = None) -> List[LabeledInstance]:
    """Return up to ``k`` buffer entries nearest to ``q``, closest first.

    ``mask`` optionally restricts retrieval (boolean array aligned with the
    oldest-first view, e.g. ``buf.y == 1``). An empty candidate set gives an
    empty list.
    """
    idx = buf.knn_indices(q, k, mask)
    X, y = buf.X, buf.y
    return [LabeledInstance(X[i], int(y[i])) for i in idx]


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``.

    Keys are folded into the seed sequence's spawn key, so e.g. per-state,
    per-step streams never overlap and do not depend on call order.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def repeat_seeds(master_seed: int, repeats: int) -> List[int]:
    """Distinct 64-bit seeds for each repeat of an experiment."""
    ss = np.random.SeedSequence(int(master_seed))
    return [int(s.generate_state(1, dtype=np.uint64)[0]) for s in ss.spawn(repeats)]

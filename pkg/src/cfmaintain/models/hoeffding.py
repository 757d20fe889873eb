from __future__ import annotations

import math
from collections import deque
from typing import Optional, Tuple

import numpy as np

from .._validation import as_matrix, as_vector, check_probability
from ..core import CLASSES
from .base import OnlineClassifier

N_CLASSES = len(CLASSES)


def hoeffding_bound(value_range: float, confidence: float, n: int) -> float:
    """Radius ``sqrt(R^2 ln(1/delta) / 2n)`` of the Hoeffding confidence interval."""
    if not 0.0 < confidence <= 1.0:
        raise ValueError(f"confidence must lie in (0, 1], got {confidence!r}")
    if value_range <= 0 or n < 1:
        raise ValueError("value_range must be > 0 and n >= 1")
    return math.sqrt(value_range ** 2 * math.log(1.0 / confidence) / (2.0 * n))


def entropy(counts: np.ndarray) -> np.ndarray:
    """Base-2 entropy along the last axis; empty distributions have entropy 0."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(n > 0, counts / n, 0.0)
        logs = np.where(p > 0, np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -(p * logs).sum(axis=-1)


def split_gains(stats: np.ndarray) -> np.ndarray:
    """Information gain of every binned threshold.

    ``stats[f, b, c]`` counts class ``c`` in bin ``b`` of feature ``f``.
    Entry ``[f, i]`` of the result is the gain of sending bins ``< i+1``
    left, i.e. thresholds at the ``n_bins - 1`` interior edges.
    """
    cum = np.cumsum(stats, axis=1)[:, :-1, :]  # (d, n_bins-1, C)
    total = stats.sum(axis=1)[:, None, :]
    right = total - cum
    n = total.sum(axis=-1)
    n_left = cum.sum(axis=-1)
    n_right = right.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        child = (n_left * entropy(cum) + n_right * entropy(right)) / n
    gains = entropy(total) - np.where(n > 0, child, 0.0)
    # a threshold leaving one side empty is not a split
    return np.where((n_left > 0) & (n_right > 0), gains, 0.0)


class _Leaf:
    __slots__ = ("counts", "stats", "seen")

    def __init__(self, n_features: int, n_bins: int, counts=None):
        self.counts = np.zeros(N_CLASSES, dtype=np.int64) if counts is None \
            else np.asarray(counts, dtype=np.int64).copy()
        self.stats = np.zeros((n_features, n_bins, N_CLASSES), dtype=np.int64)
        self.seen = 0

    def proba(self) -> np.ndarray:
        return (self.counts + 1.0) / (self.counts.sum() + N_CLASSES)


class _Split:
    __slots__ = ("feature", "threshold", "left", "right", "window", "window_counts",
                 "errors", "baseline", "alternate", "duel", "duel_main", "duel_alt",
                 "duel_seen")

    def __init__(self, feature: int, threshold: float, left, right, window_size: int):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.window = deque(maxlen=window_size)  # (error, label) pairs
        self.window_counts = np.zeros(N_CLASSES, dtype=np.int64)
        self.errors = 0
        self.baseline: Optional[float] = None
        self.alternate = None
        self.duel: Optional[deque] = None  # paired (main error, alternate error)
        self.duel_main = self.duel_alt = self.duel_seen = 0

    def child(self, x) -> object:
        return self.left if x[self.feature] < self.threshold else self.right

    def record(self, error: bool, y: int) -> None:
        if len(self.window) == self.window.maxlen:
            old_err, old_y = self.window[0]
            self.errors -= old_err
            self.window_counts[old_y] -= 1
        self.window.append((int(error), y))
        self.errors += int(error)
        self.window_counts[y] += 1
        if self.baseline is None and len(self.window) == self.window.maxlen:
            self.baseline = self.error_rate

    @property
    def error_rate(self) -> float:
        return self.errors / len(self.window) if self.window else 0.0

    def start_alternate(self, leaf, duel_size: int) -> None:
        self.alternate = leaf
        self.duel = deque(maxlen=duel_size)
        self.duel_main = self.duel_alt = self.duel_seen = 0

    def record_duel(self, main_err: bool, alt_err: bool) -> None:
        if len(self.duel) == self.duel.maxlen:
            m, a = self.duel[0]
            self.duel_main -= m
            self.duel_alt -= a
        self.duel.append((int(main_err), int(alt_err)))
        self.duel_main += int(main_err)
        self.duel_alt += int(alt_err)
        self.duel_seen += 1

    def drop_alternate(self) -> None:
        self.alternate = None
        self.duel = None
        self.baseline = None  # re-measured on the next full window


def _predict_from(node, x) -> int:
    while isinstance(node, _Split):
        node = node.left if x[node.feature] < node.threshold else node.right
    p = node.proba()
    return 0 if p[0] >= p[1] else 1


class HoeffdingTreeClassifier(OnlineClassifier):
    """Incremental decision tree with Hoeffding-bound split decisions.

    Numeric features are summarised per leaf by equal-width bins on [0, 1];
    candidate thresholds sit on the bin edges and every split is binary.
    Leaves predict with Laplace-smoothed class counts.

    With ``adaptive=True`` every internal node keeps a sliding window of the
    prequential errors of its subtree. The first full window fixes the node's
    reference error. Once the windowed error exceeds it by
    ``drift_threshold``, a fresh leaf seeded with the window's class counts
    starts growing as an alternate subtree on the same instances. The
    alternate replaces the node as soon as it has made fewer errors over the
    last ``window_size // 3`` paired predictions; it is discarded if that
    has not happened after ``2 * window_size`` instances.
    """

    def __init__(self, grace_period: int = 50, split_confidence: float = 1e-3,
                 tie_threshold: float = 0.1, n_bins: int = 10, adaptive: bool = True,
                 window_size: int = 300, drift_threshold: float = 0.15):
        self.grace_period = grace_period
        self.split_confidence = split_confidence
        self.tie_threshold = tie_threshold
        self.n_bins = n_bins
        self.adaptive = adaptive
        self.window_size = window_size
        self.drift_threshold = drift_threshold

    def _reset(self) -> None:
        for attr in ("root_", "n_features_in_", "n_splits_", "n_replacements_"):
            self.__dict__.pop(attr, None)

    def _init(self, d: int) -> None:
        check_probability(self.split_confidence, "split_confidence")
        if self.grace_period < 1 or self.n_bins < 2:
            raise ValueError("grace_period must be >= 1 and n_bins >= 2")
        self.n_features_in_ = d
        self.root_ = _Leaf(d, self.n_bins)
        self.n_splits_ = 0
        self.n_replacements_ = 0

    # -- routing -----------------------------------------------------------
    def _bins(self, x: np.ndarray) -> np.ndarray:
        return np.clip((x * self.n_bins).astype(int), 0, self.n_bins - 1)

    # -- learning ----------------------------------------------------------
    def learn_one(self, x, y: int) -> "HoeffdingTreeClassifier":
        x = as_vector(x, getattr(self, "n_features_in_", None))
        y = int(y)
        if y not in CLASSES:
            raise ValueError(f"label must be in {CLASSES}, got {y}")
        if not hasattr(self, "root_"):
            self._init(x.shape[0])
        self.root_ = self._learn(self.root_, x, y)
        return self

    def _learn(self, node, x: np.ndarray, y: int):
        """Train the subtree rooted at ``node``; returns its (possibly new) root."""
        if isinstance(node, _Leaf):
            node.counts[y] += 1
            node.stats[np.arange(x.shape[0]), self._bins(x), y] += 1
            node.seen += 1
            if node.seen % self.grace_period == 0:
                return self._split(node)
            return node

        if self.adaptive:
            main_err = _predict_from(node, x) != y
            node.record(main_err, y)
            if node.alternate is not None:
                node.record_duel(main_err, _predict_from(node.alternate, x) != y)
                node.alternate = self._learn(node.alternate, x, y)
                if len(node.duel) == node.duel.maxlen and node.duel_alt < node.duel_main:
                    self.n_replacements_ += 1
                    return node.alternate
                if node.duel_seen >= 2 * self.window_size:
                    node.drop_alternate()
            elif node.baseline is not None and \
                    node.error_rate > node.baseline + self.drift_threshold:
                seed = _Leaf(self.n_features_in_, self.n_bins, node.window_counts)
                node.start_alternate(seed, max(1, self.window_size // 3))

        if x[node.feature] < node.threshold:
            node.left = self._learn(node.left, x, y)
        else:
            node.right = self._learn(node.right, x, y)
        return node

    def best_splits(self, stats: np.ndarray) -> Tuple[Tuple[float, int, int], float]:
        """Best ``(gain, feature, edge)`` and the runner-up gain.

        The runner-up is the best gain of any *other* feature, or the
        no-split gain of 0.
        """
        gains = split_gains(stats)
        per_feature = gains.max(axis=1)
        order = np.argsort(-per_feature, kind="stable")
        f1 = int(order[0])
        edge = int(np.argmax(gains[f1]))
        second = float(per_feature[order[1]]) if len(order) > 1 else 0.0
        return (float(per_feature[f1]), f1, edge), max(second, 0.0)

    def try_split(self, leaf: _Leaf):
        """Return ``(feature, threshold, left_counts, right_counts)`` or None."""
        (g1, f, edge), g2 = self.best_splits(leaf.stats)
        if g1 <= 0.0:
            return None
        eps = hoeffding_bound(math.log2(N_CLASSES), self.split_confidence, leaf.seen)
        if g1 - g2 > eps or eps < self.tie_threshold:
            left = leaf.stats[f, : edge + 1].sum(axis=0)
            right = leaf.stats[f, edge + 1:].sum(axis=0)
            return f, (edge + 1) / self.n_bins, left, right
        return None

    def _split(self, leaf: _Leaf):
        decision = self.try_split(leaf)
        if decision is None:
            return leaf
        f, threshold, left_counts, right_counts = decision
        self.n_splits_ += 1
        return _Split(f, threshold,
                      _Leaf(self.n_features_in_, self.n_bins, left_counts),
                      _Leaf(self.n_features_in_, self.n_bins, right_counts),
                      self.window_size)

    # -- prediction --------------------------------------------------------
    def proba_one(self, x) -> np.ndarray:
        if not hasattr(self, "root_"):
            return np.full(N_CLASSES, 1.0 / N_CLASSES)
        node = self.root_
        while isinstance(node, _Split):
            node = node.left if x[node.feature] < node.threshold else node.right
        return node.proba()

    def predict_proba(self, X) -> np.ndarray:
        X = as_matrix(X, getattr(self, "n_features_in_", None))
        out = np.full((X.shape[0], N_CLASSES), 1.0 / N_CLASSES)
        if not hasattr(self, "root_"):
            return out
        stack = [(self.root_, np.arange(X.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            if isinstance(node, _Leaf):
                out[idx] = node.proba()
                continue
            goes_left = X[idx, node.feature] < node.threshold
            stack.append((node.left, idx[goes_left]))
            stack.append((node.right, idx[~goes_left]))
        return out

    # -- introspection -----------------------------------------------------
    def leaves(self):
        """Yield ``(lower, upper, leaf)`` for every leaf; bounds are half-open boxes."""
        d = self.n_features_in_
        stack = [(self.root_, np.full(d, -np.inf), np.full(d, np.inf))]
        while stack:
            node, lo, hi = stack.pop()
            if isinstance(node, _Leaf):
                yield lo, hi, node
                continue
            l_hi = hi.copy()
            l_hi[node.feature] = min(hi[node.feature], node.threshold)
            r_lo = lo.copy()
            r_lo[node.feature] = max(lo[node.feature], node.threshold)
            stack.append((node.left, lo, l_hi))
            stack.append((node.right, r_lo, hi))

    @property
    def n_leaves(self) -> int:
        return sum(1 for _ in self.leaves()) if hasattr(self, "root_") else 0

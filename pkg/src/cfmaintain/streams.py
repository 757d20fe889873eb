"""Synthetic binary streams with gradual (linearly interpolated) concept drift.

Three concepts are provided, all on the unit cube:

* ``hyperplane`` -- a line through the centre whose angle rotates.
* ``sine`` -- ``x2 > 0.5 + A sin(2 pi x1 + phase)`` with a drifting phase.
* ``sea`` -- ``x1 + x2 <= threshold`` with a drifting threshold; any further
  features are irrelevant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional

import numpy as np

from .core import LabeledInstance, make_rng

KINDS = ("hyperplane", "sine", "sea")

DEFAULT_FEATURES = {"hyperplane": 2, "sine": 2, "sea": 3}

DEFAULT_PARAMS: Dict[str, Dict[str, float]] = {
    "hyperplane": {"theta0": 0.0, "delta_theta": math.pi / 2},
    "sine": {"phi0": 0.0, "delta_phi": math.pi / 2, "amplitude": 0.4},
    "sea": {"threshold0": 0.8, "threshold1": 0.7},
}


@dataclass(frozen=True)
class DriftSchedule:
    t_start: int = 0
    width: int = 2000

    def __post_init__(self):
        if self.width < 1:
            raise ValueError(f"drift width must be >= 1, got {self.width}")


def drift_progress(sched: DriftSchedule, t: int) -> float:
    """Fraction of the transition completed at sample ``t``, clamped to [0, 1]."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return min(1.0, max(0.0, (t - sched.t_start) / sched.width))


@dataclass(frozen=True)
class StreamSpec:
    kind: str = "hyperplane"
    n_features: Optional[int] = None
    drift: DriftSchedule = field(default_factory=DriftSchedule)
    params: Dict[str, float] = field(default_factory=dict)
    noise_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown stream kind {self.kind!r}; expected one of {KINDS}")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValueError(f"noise_rate must lie in [0, 1), got {self.noise_rate}")
        d = self.dim
        minimum = 3 if self.kind == "sea" else 2
        if d < minimum:
            raise ValueError(f"{self.kind} stream needs at least {minimum} features, got {d}")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.kind])
        if unknown:
            raise ValueError(f"unknown {self.kind} parameters: {sorted(unknown)}")

    @property
    def dim(self) -> int:
        return self.n_features if self.n_features is not None else DEFAULT_FEATURES[self.kind]

    def param(self, name: str) -> float:
        return self.params.get(name, DEFAULT_PARAMS[self.kind][name])


def concept_parameter(spec: StreamSpec, progress: float) -> float:
    """The drifting quantity: angle (hyperplane), phase (sine) or threshold (sea)."""
    if spec.kind == "hyperplane":
        return spec.param("theta0") + spec.param("delta_theta") * progress
    if spec.kind == "sine":
        return spec.param("phi0") + spec.param("delta_phi") * progress
    t0, t1 = spec.param("threshold0"), spec.param("threshold1")
    return t0 + (t1 - t0) * progress


def label(spec: StreamSpec, X, progress: float) -> np.ndarray:
    """Noise-free labels of the rows of ``X`` under the concept at ``progress``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    c = concept_parameter(spec, progress)
    if spec.kind == "hyperplane":
        side = math.sin(c) * (X[:, 0] - 0.5) - math.cos(c) * (X[:, 1] - 0.5)
        return (side < 0).astype(int)
    if spec.kind == "sine":
        s = 0.5 + spec.param("amplitude") * np.sin(2 * np.pi * X[:, 0] + c)
        return (X[:, 1] > s).astype(int)
    return (X[:, 0] + X[:, 1] <= c).astype(int)


def stream_next(spec: StreamSpec, t: int, rng: np.random.Generator) -> LabeledInstance:
    """Draw the sample emitted at stream position ``t``."""
    x = rng.random(spec.dim)
    y = int(label(spec, x, drift_progress(spec.drift, t))[0])
    if spec.noise_rate > 0 and rng.random() < spec.noise_rate:
        y = 1 - y
    return LabeledInstance(x, y)


class DriftingStream:
    """Iterator over ``(x, y)`` for a :class:`StreamSpec`.

    Draws are made from a private generator seeded from ``spec.seed``, so
    two streams with the same spec replay identically.
    """

    def __init__(self, spec: StreamSpec):
        self.spec = spec
        self.t = 0
        self._rng = make_rng(spec.seed, 0)

    def __iter__(self) -> Iterator[LabeledInstance]:
        return self

    def __next__(self) -> LabeledInstance:
        inst = stream_next(self.spec, self.t, self._rng)
        self.t += 1
        return inst

    def take(self, n: int, t: Optional[int] = None):
        """Draw ``n`` samples. With ``t`` given, all use that fixed concept
        position and the stream clock does not advance (initial batches)."""
        X = np.empty((n, self.spec.dim))
        y = np.empty(n, dtype=int)
        for i in range(n):
            if t is None:
                X[i], y[i] = next(self)
            else:
                X[i], y[i] = stream_next(self.spec, t, self._rng)
        return X, y

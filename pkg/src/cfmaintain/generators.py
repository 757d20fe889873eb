"""Counterfactual generators: nearest neighbour, Growing Spheres and a RobX-style robustifier.

Every generator returns a point in the unit cube that the model predicts as
the target class, or raises :class:`GenerationError`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_vector, check_positive, check_probability
from .core import LabeledBuffer


class GenerationError(RuntimeError):
    """No counterfactual of the requested class could be found."""


class NoPrototypeWarning(UserWarning):
    """RobX found no buffer prototype of the target class and kept its base."""


def _predict_buffer(buf: LabeledBuffer, model, buffer_pred: Optional[np.ndarray]):
    if buffer_pred is not None:
        return buffer_pred
    return model.predict(buf.X) if len(buf) else np.zeros(0, dtype=int)


def nn_generate(x0, target: int, buf: LabeledBuffer, model,
                buffer_pred: Optional[np.ndarray] = None) -> np.ndarray:
    """Closest buffer point that the model currently assigns to ``target``."""
    x0 = as_vector(x0, buf.n_features, name="x0")
    pred = _predict_buffer(buf, model, buffer_pred)
    idx = buf.knn_indices(x0, 1, mask=pred == target)
    if idx.size == 0:
        raise GenerationError(f"no buffer point is predicted as class {target}")
    return buf.X[idx[0]].copy()


@dataclass(frozen=True)
class GrowingSpheresConfig:
    n_samples: int = 60
    r0: float = 0.05
    step: float = 0.05
    r_max: Optional[float] = None  # defaults to 2 * sqrt(d)

    def __post_init__(self):
        check_positive(self.n_samples, "n_samples")
        check_positive(self.r0, "r0")
        check_positive(self.step, "step")
        if self.r_max is not None:
            check_positive(self.r_max, "r_max")


def sample_annulus(center: np.ndarray, r_low: float, r_high: float, n: int,
                   rng: np.random.Generator) -> np.ndarray:
    """``n`` points uniform (by volume) in the shell ``r_low <= |z - center| <= r_high``."""
    d = center.shape[0]
    directions = rng.standard_normal((n, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    u = rng.random(n)
    radii = (r_low ** d + u * (r_high ** d - r_low ** d)) ** (1.0 / d)
    return center + directions * radii[:, None]


def gs_generate(x0, target: int, model, cfg: GrowingSpheresConfig,
                rng: np.random.Generator) -> np.ndarray:
    """Search outward shells around ``x0`` until a sample hits ``target``.

    Samples are clipped to the unit cube; the closest hit of the first
    successful shell is returned.
    """
    x0 = as_vector(x0, name="x0")
    r_max = cfg.r_max if cfg.r_max is not None else 2.0 * math.sqrt(x0.shape[0])
    r = cfg.r0
    while r <= r_max:
        Z = np.clip(sample_annulus(x0, r, r + cfg.step, cfg.n_samples, rng), 0.0, 1.0)
        hits = Z[model.predict(Z) == target]
        if len(hits):
            return hits[np.argmin(np.sum((hits - x0) ** 2, axis=1))].copy()
        r += cfg.step
    raise GenerationError(f"no class-{target} point within radius {r_max:.3g} of x0")


def stability(x, target: int, model, spread: float, n_samples: int,
              rng: np.random.Generator) -> float:
    """Mean minus (population) std of ``p(target)`` over a Gaussian neighbourhood of ``x``."""
    check_positive(spread, "spread")
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    x = np.asarray(x, dtype=float)
    Z = x + spread * rng.standard_normal((n_samples, x.shape[0]))
    q = model.predict_proba(Z)[:, target]
    return float(q.mean() - q.std())


@dataclass(frozen=True)
class StabilityConfig:
    spread: float = 0.1
    n_samples: int = 100
    threshold: float = 0.65
    blend: float = 0.3
    n_prototypes: int = 10
    max_iter: int = 50

    def __post_init__(self):
        check_positive(self.spread, "spread")
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        check_probability(self.threshold, "threshold")
        if not 0.0 < self.blend <= 1.0:
            raise ValueError(f"blend must lie in (0, 1], got {self.blend}")
        check_positive(self.n_prototypes, "n_prototypes")
        check_positive(self.max_iter, "max_iter")


def robx_generate(x0, target: int, base, buf: LabeledBuffer, model, cfg: StabilityConfig,
                  rng: np.random.Generator,
                  buffer_pred: Optional[np.ndarray] = None) -> np.ndarray:
    """Pull a valid base counterfactual towards stable target-class prototypes.

    Each round keeps the current point if its stability reaches the
    threshold; otherwise it blends towards the most stable of the nearest
    buffer points whose label and prediction are both ``target``. The most
    stable valid iterate seen is returned.
    """
    x_cur = as_vector(base, buf.n_features, name="base").copy()
    pred = _predict_buffer(buf, model, buffer_pred)
    mask = (pred == target) & (buf.y == target)
    if not mask.any():
        warnings.warn(f"no class-{target} prototypes in buffer; keeping base",
                      NoPrototypeWarning, stacklevel=2)
        return x_cur
    X = buf.X

    def score(z):
        return stability(z, target, model, cfg.spread, cfg.n_samples, rng)

    best, best_score, best_valid = x_cur.copy(), -np.inf, False
    for _ in range(cfg.max_iter):
        s = score(x_cur)
        valid = model.predict_one(x_cur) == target
        if (valid, s) > (best_valid, best_score):
            best, best_score, best_valid = x_cur.copy(), s, valid
        if valid and s >= cfg.threshold:
            return x_cur
        protos = X[buf.knn_indices(x_cur, cfg.n_prototypes, mask=mask)]
        proto = protos[int(np.argmax([score(z) for z in protos]))]
        x_cur = np.clip((1.0 - cfg.blend) * x_cur + cfg.blend * proto, 0.0, 1.0)
    s = score(x_cur)
    valid = model.predict_one(x_cur) == target
    if (valid, s) > (best_valid, best_score):
        best = x_cur
    return best


class GrowingSpheres(BaseEstimator):
    """Estimator wrapper around :func:`gs_generate`."""

    def __init__(self, n_samples: int = 60, r0: float = 0.05, step: float = 0.05,
                 r_max: Optional[float] = None):
        self.n_samples = n_samples
        self.r0 = r0
        self.step = step
        self.r_max = r_max

    def generate(self, x0, target, model, rng, buf=None, buffer_pred=None):
        cfg = GrowingSpheresConfig(self.n_samples, self.r0, self.step, self.r_max)
        return gs_generate(x0, target, model, cfg, rng)


class NearestNeighbor(BaseEstimator):
    """Estimator wrapper around :func:`nn_generate`."""

    def generate(self, x0, target, model, rng, buf=None, buffer_pred=None):
        return nn_generate(x0, target, buf, model, buffer_pred)


class RobX(BaseEstimator):
    """Growing Spheres (or nearest neighbour) followed by :func:`robx_generate`."""

    def __init__(self, base: str = "gs", spread: float = 0.1, n_samples: int = 100,
                 threshold: float = 0.65, blend: float = 0.3, n_prototypes: int = 10,
                 max_iter: int = 50, gs_samples: int = 60, gs_r0: float = 0.05,
                 gs_step: float = 0.05):
        self.base = base
        self.spread = spread
        self.n_samples = n_samples
        self.threshold = threshold
        self.blend = blend
        self.n_prototypes = n_prototypes
        self.max_iter = max_iter
        self.gs_samples = gs_samples
        self.gs_r0 = gs_r0
        self.gs_step = gs_step

    def generate(self, x0, target, model, rng, buf=None, buffer_pred=None):
        if self.base == "gs":
            gs = GrowingSpheresConfig(self.gs_samples, self.gs_r0, self.gs_step)
            start = gs_generate(x0, target, model, gs, rng)
        elif self.base == "nn":
            start = nn_generate(x0, target, buf, model, buffer_pred)
        else:
            raise ValueError(f"unknown RobX base generator {self.base!r}")
        cfg = StabilityConfig(self.spread, self.n_samples, self.threshold, self.blend,
                              self.n_prototypes, self.max_iter)
        return robx_generate(x0, target, start, buf, model, cfg, rng, buffer_pred)


GENERATORS = {"nn": NearestNeighbor, "gs": GrowingSpheres, "robx": RobX}


def make_generator(kind: str, **params) -> BaseEstimator:
    try:
        return GENERATORS[kind](**params)
    except KeyError:
        raise ValueError(f"unknown generator {kind!r}; expected one of {sorted(GENERATORS)}") from None

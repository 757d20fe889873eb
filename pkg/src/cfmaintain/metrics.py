"""Quality of a counterfactual population against the current model and buffer."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from ._validation import check_positive
from .core import CfeState, LabeledBuffer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsConfig:
    k: int = 15
    bandwidth: float = 0.1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        check_positive(self.bandwidth, "bandwidth")


@dataclass
class CheckpointReport:
    """Mean metrics over the active states at one checkpoint.

    Metric fields are ``None`` when undefined (e.g. no active states), never 0.
    """

    checkpoint: int
    method: str
    validity: Optional[float]
    l2: Optional[float]
    knn: Optional[float]
    kde: Optional[float]
    active: int
    retired: int
    elapsed: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def validity_metric(states: Sequence[CfeState], model) -> Optional[float]:
    """Fraction of the given (active) states whose counterfactual is predicted as target."""
    if not states:
        return None
    X = np.array([s.x_cf for s in states])
    targets = np.array([s.target for s in states])
    return float(np.mean(model.predict(X) == targets))


def proximity(x, x_cf) -> float:
    return float(np.linalg.norm(np.asarray(x_cf, dtype=float) - np.asarray(x, dtype=float)))


def knn_score(x_cf, target: int, buf: LabeledBuffer, k: int = 15) -> Optional[float]:
    """Share of the ``k`` nearest buffer points (any label) whose true label is ``target``."""
    if len(buf) == 0:
        return None
    if len(buf) < k:
        logger.warning("buffer holds %d < k=%d points; using all of them", len(buf), k)
    idx = buf.knn_indices(x_cf, k)
    return float(np.mean(buf.y[idx] == target))


def kde_score(x_cf, target: int, buf: LabeledBuffer, bandwidth: float = 0.1) -> float:
    """Log of the Gaussian-kernel density of the target-class buffer points at ``x_cf``.

    Uses ``log(1 / (n h^d) * sum exp(-|x - z|^2 / 2h^2))``. Returns ``-inf``
    when the buffer holds no point of the target class.
    """
    check_positive(bandwidth, "bandwidth")
    Z = buf.X[buf.y == target]
    if len(Z) == 0:
        return -math.inf
    x_cf = np.asarray(x_cf, dtype=float)
    d = x_cf.shape[0]
    sq = np.sum((Z - x_cf) ** 2, axis=1)
    return float(logsumexp(-sq / (2.0 * bandwidth ** 2))
                 - math.log(len(Z)) - d * math.log(bandwidth))


def _mean(values) -> Optional[float]:
    values = [v for v in values if v is not None and math.isfinite(v)]
    return float(np.mean(values)) if values else None


def checkpoint_evaluate(states: Sequence[CfeState], model, buf: LabeledBuffer,
                        cfg: MetricsConfig = MetricsConfig(), checkpoint: int = 0,
                        method: str = "", active_mask: Optional[np.ndarray] = None
                        ) -> CheckpointReport:
    """Evaluate all four metrics over the active states.

    ``active_mask`` overrides the states' own flags, so methods can be
    compared on an identical index set.
    """
    start = time.perf_counter()
    if active_mask is None:
        active_mask = np.array([s.active for s in states], dtype=bool)
    active = [s for s, a in zip(states, active_mask) if a]
    kde = [kde_score(s.x_cf, s.target, buf, cfg.bandwidth) for s in active]
    n_missing = sum(1 for v in kde if not math.isfinite(v))
    if n_missing:
        logger.warning("%s: %d KDE scores undefined (no target-class buffer points)",
                       method, n_missing)
    return CheckpointReport(
        checkpoint=checkpoint,
        method=method,
        validity=validity_metric(active, model),
        l2=_mean(proximity(s.x0, s.x_cf) for s in active),
        knn=_mean(knn_score(s.x_cf, s.target, buf, cfg.k) for s in active),
        kde=_mean(kde),
        active=len(active),
        retired=len(states) - len(active),
        elapsed=time.perf_counter() - start,
    )

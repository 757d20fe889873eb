"""Continuous repair of counterfactual explanations while the classifier drifts.

A maintenance sweep visits every active :class:`~cfmaintain.core.CfeState`:

1. states whose query is already predicted as the target are retired;
2. a state is *low-margin* when its counterfactual is invalid or its target
   probability is below ``tau_low``;
3. a correction vector ``u`` is chosen (a surrogate-gradient *validity*
   direction or a mean-shift *plausibility* direction, depending on the
   variant and the sweep counter);
4. the counterfactual moves a fixed distance ``alpha`` along the normalised
   blend of ``u`` and the pull back towards the query.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_positive, check_probability
from .core import CfeState, LabeledBuffer, make_rng

VARIANTS = ("vp", "p")

RETIRED = "retired"
UNCHANGED = "unchanged"
VALIDITY_STEP = "validity-step"
PLAUSIBILITY_STEP = "plausibility-step"
SKIPPED = "skipped-degenerate"

# vectors shorter than this are treated as exactly zero (rounding residue)
ZERO_TOL = 1e-10
_GRID = float(2 ** 20)


@dataclass(frozen=True)
class MaintenanceConfig:
    """Hyper-parameters of the update rule and of both direction estimators.

    ``variant`` is ``"vp"`` (validity direction on low margin plus a
    plausibility step every ``period`` sweeps) or ``"p"`` (plausibility
    direction on low margin only).
    """

    variant: str = "vp"
    tau_low: float = 0.6
    lambda_u: float = 2.0
    lambda_r: float = 1.0
    alpha: float = 0.05
    period: int = 60
    sigma: float = 0.15
    n_perturbations: int = 200
    ridge: float = 1e-3
    k_buffer: int = 25
    bandwidth: float = 0.3
    cadence: int = 10

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        check_probability(self.tau_low, "tau_low")
        check_positive(self.lambda_u, "lambda_u", strict=False)
        check_positive(self.lambda_r, "lambda_r", strict=False)
        if self.lambda_u == 0 and self.lambda_r == 0:
            raise ValueError("lambda_u and lambda_r cannot both be 0")
        for name in ("alpha", "sigma", "ridge", "bandwidth"):
            check_positive(getattr(self, name), name)
        for name in ("period", "n_perturbations", "k_buffer", "cadence"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class UpdateOutcome:
    action: str
    state: CfeState
    p_before: Optional[float] = None
    p_after: Optional[float] = None
    u_norm: Optional[float] = None
    r_norm: Optional[float] = None

    @property
    def x_cf(self) -> np.ndarray:
        return self.state.x_cf


# -- decision rules -------------------------------------------------------

def check_retire(state: CfeState, model) -> bool:
    """True when the model already predicts the target for the query itself."""
    return model.predict_one(state.x0) == state.target


def needs_update(state: CfeState, model, tau_low: float) -> bool:
    p = model.proba_one(state.x_cf)
    return _is_low(p, state.target, tau_low)


def _is_low(p: np.ndarray, target: int, tau_low: float) -> bool:
    predicted = 0 if p[0] >= p[1] else 1
    return predicted != target or p[target] < tau_low


# -- correction directions ------------------------------------------------

def ridge_coefficients(E: np.ndarray, q: np.ndarray, w: np.ndarray, ridge: float) -> np.ndarray:
    """Weighted ridge solution ``(E^T W E + ridge I)^-1 E^T W q`` (no intercept)."""
    Ew = E * w[:, None]
    A = E.T @ Ew + ridge * np.eye(E.shape[1])
    return np.linalg.solve(A, Ew.T @ q)


def validity_direction(x_cf, target: int, model, sigma: float, n_perturbations: int,
                       ridge: float, rng: np.random.Generator) -> np.ndarray:
    """Slope of a Gaussian-weighted local linear fit of ``p(target)`` around ``x_cf``.

    Perturbations are drawn in antithetic pairs ``(e, -e)``.
    """
    if n_perturbations < 1:
        raise ValueError("n_perturbations must be >= 1")
    check_positive(sigma, "sigma")
    check_positive(ridge, "ridge")
    x_cf = np.asarray(x_cf, dtype=float)
    # antithetic pairs: each row is still N(0, sigma^2 I), but a locally
    # constant probability surface now yields exactly v = 0
    half = sigma * rng.standard_normal(((n_perturbations + 1) // 2, x_cf.shape[0]))
    E = np.concatenate([half, -half])[:n_perturbations]
    q = model.predict_proba(x_cf + E)[:, target]
    w = np.exp(-np.sum(E ** 2, axis=1) / (2.0 * sigma ** 2))
    return ridge_coefficients(E, q, w, ridge)


def epanechnikov(r, h: float) -> float:
    """``max(0, 1 - |r|^2 / h^2)``; ``r`` may be a vector or a stack of vectors."""
    check_positive(h, "h")
    r = np.asarray(r, dtype=float)
    return np.maximum(0.0, 1.0 - np.sum(r ** 2, axis=-1) / h ** 2)


def plausibility_direction(x_cf, target: int, buf: LabeledBuffer, model, k_buffer: int,
                           bandwidth: float,
                           buffer_pred: Optional[np.ndarray] = None) -> Optional[np.ndarray]:
    """Epanechnikov mean shift from ``x_cf`` towards nearby confirmed target points.

    Neighbours are the ``k_buffer`` nearest buffer points whose true label
    and current prediction both equal ``target``. When none fall inside the
    kernel support the plain mean offset is used. Returns ``None`` when no
    neighbour qualifies.
    """
    if len(buf) == 0:
        return None
    x_cf = np.asarray(x_cf, dtype=float)
    pred = model.predict(buf.X) if buffer_pred is None else buffer_pred
    idx = buf.knn_indices(x_cf, k_buffer, mask=(buf.y == target) & (pred == target))
    if idx.size == 0:
        return None
    offsets = buf.X[idx] - x_cf
    weights = epanechnikov(offsets, bandwidth)
    total = weights.sum()
    if total <= 0.0:
        return offsets.mean(axis=0)
    return weights @ offsets / total


# -- update rule ------------------------------------------------------------

def combined_direction(u, r, lambda_u: float, lambda_r: float) -> Optional[np.ndarray]:
    """Unit vector along ``lambda_u * u_hat + lambda_r * r_hat``.

    A (numerically) zero vector contributes nothing: its unit vector is
    taken as 0. Returns ``None`` if the blend cancels out.
    """
    u = np.asarray(u, dtype=float)
    r = np.asarray(r, dtype=float)
    nu, nr = np.linalg.norm(u), np.linalg.norm(r)
    blend = np.zeros_like(u)
    if nu > ZERO_TOL:
        # snap u_hat to a 2^-20 grid so u and c*u (c > 0) give bit-equal steps
        # despite the rounding in forming c*u
        blend = blend + lambda_u * (np.rint((u / nu) * _GRID) / _GRID)
    if nr > ZERO_TOL:
        blend = blend + lambda_r * (r / nr)
    norm = np.linalg.norm(blend)
    if norm <= 1e-12 * max(lambda_u, lambda_r, 1.0):
        return None
    return blend / norm


def apply_update(x_cf, u, x0, lambda_u: float, lambda_r: float, alpha: float,
                 clip: bool = True) -> Optional[np.ndarray]:
    """One step of length ``alpha`` along the blended correction/proximity direction.

    Returns ``None`` for a degenerate (cancelling) blend. With ``clip`` the
    result is projected back onto the unit cube, which can shorten the step.
    """
    x_cf = np.asarray(x_cf, dtype=float)
    d = combined_direction(u, np.asarray(x0, dtype=float) - x_cf, lambda_u, lambda_r)
    if d is None:
        return None
    out = x_cf + alpha * d
    return np.clip(out, 0.0, 1.0) if clip else out


# -- Algorithm --------------------------------------------------------------

class _BufferPredictions:
    """Predictions on the buffer, computed at most once per sweep."""

    def __init__(self, model, buf: LabeledBuffer):
        self.model, self.buf = model, buf
        self._pred = None

    def get(self) -> np.ndarray:
        if self._pred is None:
            self._pred = self.model.predict(self.buf.X)
        return self._pred


def maintain_step(state: CfeState, model, buf: LabeledBuffer, step: int,
                  cfg: MaintenanceConfig, rng, buffer_pred=None,
                  retire: Optional[bool] = None,
                  proba: Optional[np.ndarray] = None) -> UpdateOutcome:
    """Apply one maintenance round to a single state.

    ``rng`` is a Generator or a zero-argument callable returning one (only
    invoked if random draws are needed). ``buffer_pred`` may be an array of
    current buffer predictions or a holder with a ``get()`` method.
    ``retire`` and ``proba`` accept precomputed model answers for ``x0``
    and ``x_cf``; they are queried here otherwise.
    """
    if not state.active:
        return UpdateOutcome(UNCHANGED, state)
    if retire is None:
        retire = check_retire(state, model)
    if retire:
        return UpdateOutcome(RETIRED, state.retired())

    p = model.proba_one(state.x_cf) if proba is None else proba
    p_before = float(p[state.target])
    low = _is_low(p, state.target, cfg.tau_low)

    if low and cfg.variant == "vp":
        gen = rng() if callable(rng) else rng
        u = validity_direction(state.x_cf, state.target, model, cfg.sigma,
                               cfg.n_perturbations, cfg.ridge, gen)
        action = VALIDITY_STEP
    elif low or (cfg.variant == "vp" and step % cfg.period == 0):
        preds = buffer_pred.get() if hasattr(buffer_pred, "get") else buffer_pred
        u = plausibility_direction(state.x_cf, state.target, buf, model, cfg.k_buffer,
                                   cfg.bandwidth, preds)
        action = PLAUSIBILITY_STEP
        if u is None:
            return UpdateOutcome(SKIPPED, state, p_before=p_before)
    else:
        return UpdateOutcome(UNCHANGED, state, p_before=p_before)

    new_x = apply_update(state.x_cf, u, state.x0, cfg.lambda_u, cfg.lambda_r, cfg.alpha)
    if new_x is None:
        return UpdateOutcome(SKIPPED, state, p_before=p_before,
                             u_norm=float(np.linalg.norm(u)))
    return UpdateOutcome(
        action,
        state.with_cf(new_x),
        p_before=p_before,
        p_after=float(model.proba_one(new_x)[state.target]),
        u_norm=float(np.linalg.norm(u)),
        r_norm=float(np.linalg.norm(state.x0 - state.x_cf)),
    )


def maintain_population(states: Sequence[CfeState], model, buf: LabeledBuffer, step: int,
                        cfg: MaintenanceConfig, seed: int = 0) -> List[UpdateOutcome]:
    """Run :func:`maintain_step` over every state.

    Each state draws from its own generator keyed by ``(seed, uid, step)``,
    so outcomes do not depend on the order of ``states``. The model is
    queried once for all queries and counterfactuals up front.
    """
    active = [i for i, s in enumerate(states) if s.active]
    retire = proba = None
    if active:
        retire = model.predict(np.array([states[i].x0 for i in active])) == \
            np.array([states[i].target for i in active])
        proba = model.predict_proba(np.array([states[i].x_cf for i in active]))
    slot = {i: j for j, i in enumerate(active)}
    cache = _BufferPredictions(model, buf)
    outcomes = []
    for i, s in enumerate(states):
        if i not in slot:
            outcomes.append(UpdateOutcome(UNCHANGED, s))
            continue
        j = slot[i]
        outcomes.append(maintain_step(
            s, model, buf, step, cfg,
            lambda uid=s.uid: make_rng(seed, uid, step),
            cache, retire=bool(retire[j]), proba=proba[j]))
    return outcomes


def outcome_counts(outcomes: Sequence[UpdateOutcome]) -> Dict[str, int]:
    return dict(Counter(o.action for o in outcomes))


class CounterfactualMaintainer(BaseEstimator):
    """Stateful, sklearn-style front end to :func:`maintain_population`.

    ``fit`` registers the queries, initial counterfactuals and targets;
    each ``partial_fit(model, buffer)`` performs one maintenance sweep and
    ``transform`` returns the current counterfactuals.

    >>> m = CounterfactualMaintainer(variant="p")          # doctest: +SKIP
    >>> m.fit(X0, X_cf, targets).partial_fit(model, buf)   # doctest: +SKIP
    """

    def __init__(self, variant: str = "vp", tau_low: float = 0.6, lambda_u: float = 2.0,
                 lambda_r: float = 1.0, alpha: float = 0.05, period: int = 60,
                 sigma: float = 0.15, n_perturbations: int = 200, ridge: float = 1e-3,
                 k_buffer: int = 25, bandwidth: float = 0.3, random_state: int = 0):
        self.variant = variant
        self.tau_low = tau_low
        self.lambda_u = lambda_u
        self.lambda_r = lambda_r
        self.alpha = alpha
        self.period = period
        self.sigma = sigma
        self.n_perturbations = n_perturbations
        self.ridge = ridge
        self.k_buffer = k_buffer
        self.bandwidth = bandwidth
        self.random_state = random_state

    @property
    def config(self) -> MaintenanceConfig:
        params = self.get_params()
        params.pop("random_state")
        return MaintenanceConfig(**params)

    def fit(self, X0, X_cf, targets) -> "CounterfactualMaintainer":
        X0 = np.atleast_2d(np.asarray(X0, dtype=float))
        X_cf = np.atleast_2d(np.asarray(X_cf, dtype=float))
        targets = np.asarray(targets, dtype=int).reshape(-1)
        if X0.shape != X_cf.shape or len(targets) != len(X0):
            raise ValueError("X0, X_cf and targets must describe the same states")
        self.config  # validate eagerly
        self.states_ = [CfeState(x0.copy(), xc.copy(), int(c), True, i)
                        for i, (x0, xc, c) in enumerate(zip(X0, X_cf, targets))]
        self.step_ = 0
        self.n_features_in_ = X0.shape[1]
        self.last_counts_: Dict[str, int] = {}
        return self

    def partial_fit(self, model, buf: LabeledBuffer) -> "CounterfactualMaintainer":
        self.step_ += 1
        outcomes = maintain_population(self.states_, model, buf, self.step_, self.config,
                                       self.random_state)
        self.states_ = [o.state for o in outcomes]
        self.last_counts_ = outcome_counts(outcomes)
        return self

    def transform(self, X=None) -> np.ndarray:
        return np.array([s.x_cf for s in self.states_])

    @property
    def active_mask_(self) -> np.ndarray:
        return np.array([s.active for s in self.states_], dtype=bool)

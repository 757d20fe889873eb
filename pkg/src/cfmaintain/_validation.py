"""Light-weight input checks shared by the estimators and the functional API.

The sklearn validators are used at the public ``fit``/``partial_fit`` boundary.
The helpers here are cheap enough for the per-point paths that run thousands
of times per maintenance sweep.
"""
from __future__ import annotations

import numpy as np


def as_vector(x, n_features: int | None = None, name: str = "x") -> np.ndarray:
    """Return ``x`` as a 1-D float array, checking dimension and finiteness."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if n_features is not None and arr.shape[0] != n_features:
        raise ValueError(
            f"{name} has {arr.shape[0]} features, expected {n_features}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_matrix(X, n_features: int | None = None, name: str = "X") -> np.ndarray:
    """Return ``X`` as a 2-D float array (a single row is promoted)."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if n_features is not None and arr.shape[1] != n_features:
        raise ValueError(
            f"{name} has {arr.shape[1]} features, expected {n_features}"
        )
    return arr


def check_positive(value, name: str, strict: bool = True) -> None:
    if strict and not value > 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    if not strict and not value >= 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")


def check_probability(value, name: str, open_interval: bool = True) -> None:
    if open_interval and not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
    if not open_interval and not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")

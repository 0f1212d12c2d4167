"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import numbers

import numpy as np


def as_points(X, dim=None, name="X"):
    """Coerce ``X`` to a float64 array of shape ``(n, d)``.

    A 2-D array passes through. A 1-D array is a batch of scalar points when
    ``dim == 1`` and a single point otherwise; a python scalar is a single
    1-D point. Raises ``ValueError`` on any other shape or on a dimension
    mismatch with ``dim``.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a point (d,) or a batch (n, d), got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"{name} has dimension {arr.shape[1]}, expected {dim}")
    return arr


def as_point(x, dim=None, name="x"):
    """Coerce ``x`` to a float64 array of shape ``(d,)``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a single point of shape (d,), got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    return arr


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_nonnegative(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a nonnegative finite number, got {value!r}")
    return float(value)


def check_probability(value, name="delta"):
    """Require ``value`` to lie strictly inside (0, 1)."""
    if not isinstance(value, numbers.Real) or not (0.0 < value < 1.0):
        raise ValueError(f"{name} must lie strictly inside (0, 1), got {value!r}")
    return float(value)


def check_index(value, n, name="index"):
    idx = int(value)
    if idx != value or not 0 <= idx < n:
        raise ValueError(f"{name} must be an integer in [0, {n}), got {value!r}")
    return idx

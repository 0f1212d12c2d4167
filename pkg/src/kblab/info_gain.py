"""Information gain of point sets and greedy near-maximizers.

For points with Gram matrix ``K`` and regularizer ``reg``, the normalized
gain is ``logdet(I + K / reg^2)`` and the raw gain is
``logdet(reg^2 I + K)``; the two differ by ``n * log(reg^2)`` for ``n``
points. The normalized form is nonnegative and nondecreasing and is what the
kernel-online confidence width consumes; the raw form is kept for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from ._validation import as_points, check_positive
from .kernels import kernel_matrix

__all__ = [
    "InfoGainCurve",
    "info_gain_of_set",
    "greedy_max_info_gain",
    "brute_force_max_info_gain",
]

MODES = ("normalized", "paper-literal")
_BRUTE_FORCE_LIMIT = 10**6


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


@dataclass(eq=False)
class InfoGainCurve:
    """Greedy gain values ``gamma_0 .. gamma_N`` plus the selected indices.

    ``values_normalized[n]`` is the normalized gain of the first ``n``
    selected points (``values_normalized[0] == 0``). ``mode`` picks the
    default ``values`` view; the raw view shifts by ``n * log(reg^2)``.
    """

    reg: float
    values_normalized: np.ndarray
    selected: np.ndarray
    mode: str = "normalized"

    def __post_init__(self):
        _check_mode(self.mode)

    def values_for(self, mode):
        _check_mode(mode)
        if mode == "normalized":
            return self.values_normalized
        shift = 2.0 * math.log(self.reg)
        return self.values_normalized + shift * np.arange(self.values_normalized.shape[0])

    @property
    def values(self):
        return self.values_for(self.mode)

    def __len__(self):
        return int(self.selected.shape[0])


def info_gain_of_set(kernel, reg, points, mode="normalized"):
    """Gain of a finite point multiset; the empty set has gain zero."""
    check_positive(reg, "reg")
    _check_mode(mode)
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return 0.0
    points = as_points(points, kernel.dim, name="points")
    n = points.shape[0]
    K = kernel_matrix(kernel, points)
    L = np.linalg.cholesky(np.eye(n) + K / reg**2)
    value = 2.0 * float(np.sum(np.log(np.diag(L))))
    if mode == "paper-literal":
        value += n * 2.0 * math.log(reg)
    return value


def greedy_max_info_gain(kernel, reg, grid, steps, mode="normalized"):
    """Greedily grow a multiset from ``grid`` maximizing the marginal gain.

    At each step the marginal gain of a candidate is
    ``log(1 + var(x) / reg^2)`` for the current data-free posterior variance
    ``var``; ties go to the lowest grid index. Returns an
    :class:`InfoGainCurve` whose increments telescope exactly to the gain of
    the selected prefix.
    """
    check_positive(reg, "reg")
    _check_mode(mode)
    steps = int(steps)
    if steps < 0:
        raise ValueError("steps must be a nonnegative integer")
    grid = as_points(grid, kernel.dim, name="grid")
    G = grid.shape[0]
    if G == 0:
        raise ValueError("grid must contain at least one point")
    reg2 = reg**2
    var = kernel.diag(grid).astype(float)
    V = np.zeros((steps, G))
    values = np.zeros(steps + 1)
    selected = np.zeros(steps, dtype=int)
    for t in range(steps):
        gains = np.log1p(var / reg2)
        j = int(np.argmax(gains))
        values[t + 1] = values[t] + gains[j]
        selected[t] = j
        diag = math.sqrt(reg2 + var[j])
        v = V[:t, j]
        krow = kernel(grid[j : j + 1], grid)[0]
        r = (krow - v @ V[:t]) / diag
        V[t] = r
        var = np.maximum(var - r * r, 0.0)
    return InfoGainCurve(reg, values, selected, mode)


def brute_force_max_info_gain(kernel, reg, grid, steps, mode="normalized"):
    """Exact maximum gain over all multisets of ``steps`` grid points.

    Enumerates combinations with repetition; the ordered search space
    ``len(grid) ** steps`` must not exceed ``10**6``.
    """
    check_positive(reg, "reg")
    _check_mode(mode)
    steps = int(steps)
    if steps < 0:
        raise ValueError("steps must be a nonnegative integer")
    if steps == 0:
        return 0.0
    grid = as_points(grid, kernel.dim, name="grid")
    G = grid.shape[0]
    if G**steps > _BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"search space {G}**{steps} exceeds the brute-force limit {_BRUTE_FORCE_LIMIT}"
        )
    best = -math.inf
    for combo in combinations_with_replacement(range(G), steps):
        value = info_gain_of_set(kernel, reg, grid[list(combo)], mode)
        if value > best:
            best = value
    return best

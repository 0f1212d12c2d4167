"""Point-selection rules over a fixed grid.

All rules return the index of the chosen grid point; exact ties go to the
lowest index (``np.argmax`` keeps the first maximizer). Online rules read the
current posterior; offline rules commit to their whole sequence before any
observation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_positive

__all__ = [
    "ONLINE_KINDS",
    "OFFLINE_KINDS",
    "POLICY_KINDS",
    "is_online",
    "PolicySpec",
    "ucb_pick",
    "probe_pick",
    "ucb_next",
    "ts_next",
    "probe_next",
    "offline_design",
]

ONLINE_KINDS = ("gp-ucb", "gp-ts", "coverage-probe")
OFFLINE_KINDS = ("offline-uniform-random", "offline-grid-sweep")
POLICY_KINDS = ONLINE_KINDS + OFFLINE_KINDS


def is_online(kind):
    if kind not in POLICY_KINDS:
        raise ValueError(f"unknown policy kind {kind!r}; choose one of {POLICY_KINDS}")
    return kind in ONLINE_KINDS


@dataclass(frozen=True)
class PolicySpec:
    """A policy kind, the width schedule it consults (UCB), and its seed."""

    kind: str
    schedule: object = None
    seed: int | None = None

    def __post_init__(self):
        is_online(self.kind)  # validates the kind


def ucb_pick(mean, std, width):
    """Index maximizing ``mean + width * std`` over precomputed arrays."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    if mean.shape != std.shape:
        raise ValueError("mean and std must have matching shapes")
    return int(np.argmax(mean + float(width) * std))


def probe_pick(truth, mean, std, floor):
    """Index maximizing the normalized error ``|truth - mean| / max(std, floor)``."""
    truth = np.asarray(truth, dtype=float)
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    check_positive(floor, "floor")
    z = np.abs(truth - mean) / np.maximum(std, floor)
    return int(np.argmax(z))


def ucb_next(model, grid, width):
    """Optimistic pick: maximize ``mean + width * std`` on the grid.

    ``model`` is anything with ``predict(X, return_std=True)``; with no
    observations and a stationary kernel all scores tie and index 0 wins.
    """
    mean, std = model.predict(grid, return_std=True)
    return ucb_pick(mean, std, width)


def ts_next(model, grid, rng):
    """Posterior-sample pick: one joint draw on the grid, then its argmax."""
    sample = model.sample_y(grid, np.random.default_rng(rng))
    return int(np.argmax(sample))


def probe_next(model, f, grid, sigma_floor=None):
    """Adversarial probe: visit where the normalized error is worst.

    ``f`` is the true function; the default floor is
    ``1e-6 * sqrt(kernel output scale)``.
    """
    if sigma_floor is None:
        sigma_floor = 1e-6 * float(np.sqrt(model.kernel.output_scale))
    mean, std = model.predict(grid, return_std=True)
    return probe_pick(f(grid), mean, std, sigma_floor)


def offline_design(kind, n_points, horizon, rng=None):
    """Full index sequence of an offline policy, fixed before observations.

    ``offline-uniform-random`` draws ``horizon`` i.i.d. uniform grid indices;
    ``offline-grid-sweep`` cycles ``0, 1, ..., n_points - 1, 0, ...``.
    """
    if kind not in OFFLINE_KINDS:
        raise ValueError(f"kind must be one of {OFFLINE_KINDS}, got {kind!r}")
    n_points = int(n_points)
    horizon = int(horizon)
    if n_points < 1 or horizon < 0:
        raise ValueError("need n_points >= 1 and horizon >= 0")
    if kind == "offline-uniform-random":
        return np.random.default_rng(rng).integers(0, n_points, size=horizon)
    return np.arange(horizon, dtype=int) % n_points

"""Confidence-width schedules for posterior-centered intervals.

Each function returns the multiplier ``rho`` in an interval of the form
``mean_n(x) +/- rho * sqrt(var_n(x))`` for a target function of norm at most
``norm_bound``, observation noise scale ``noise_scale``, regularizer ``reg``
and failure probability ``delta``. The schedules differ in what they pay for:
the offline ones hold for a design fixed before the data, the online ones
hold for adaptively chosen points, and the kernel-online one grows with the
accumulated information gain of the chosen points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_nonnegative, check_positive, check_probability

__all__ = [
    "offline_width",
    "offline_uniform_width",
    "linear_width",
    "ellipsoid_radius",
    "kernel_online_width",
    "conjectured_width",
    "WidthSchedule",
    "SCHEDULE_KINDS",
]


def _common(norm_bound, noise_scale, delta):
    check_nonnegative(norm_bound, "norm_bound")
    check_nonnegative(noise_scale, "noise_scale")
    check_probability(delta, "delta")


def _count(n):
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")
    return int(n)


def offline_width(norm_bound, noise_scale, reg, delta):
    """Fixed-point width for designs chosen independently of the data:

    ``norm_bound + (noise_scale / reg) * sqrt(2 * log(2 / delta))``
    """
    _common(norm_bound, noise_scale, delta)
    check_positive(reg, "reg")
    return norm_bound + (noise_scale / reg) * math.sqrt(2.0 * math.log(2.0 / delta))


def offline_uniform_width(norm_bound, noise_scale, reg, delta, dim, n, constant=1.0):
    """Width holding uniformly over a compact domain, up to ``constant``:

    ``constant * (norm_bound + (noise_scale / reg)
                  * sqrt(dim * log(max(n, 2)) + log(1 / delta)))``
    """
    _common(norm_bound, noise_scale, delta)
    check_positive(reg, "reg")
    check_positive(dim, "dim")
    check_positive(constant, "constant")
    n = _count(n)
    inner = dim * math.log(max(n, 2)) + math.log(1.0 / delta)
    return constant * (norm_bound + (noise_scale / reg) * math.sqrt(inner))


def linear_width(norm_bound, noise_scale, reg, delta, dim, n, x_bar):
    """Online width for the linear kernel after ``n`` adaptive points:

    ``norm_bound + (noise_scale / reg)
      * sqrt(dim * log((1 + n * x_bar^2 / reg^2) / delta))``

    where ``x_bar`` bounds the Euclidean norm of the actions.
    """
    _common(norm_bound, noise_scale, delta)
    check_positive(reg, "reg")
    check_positive(dim, "dim")
    check_nonnegative(x_bar, "x_bar")
    n = _count(n)
    inner = dim * math.log((1.0 + n * x_bar**2 / reg**2) / delta)
    return norm_bound + (noise_scale / reg) * math.sqrt(inner)


def ellipsoid_radius(norm_bound, noise_scale, reg, delta, dim, n, x_bar):
    """Radius ``reg * linear_width(...)`` of the weight-space confidence set

    ``||w - w_hat_n||_{V_n} <= reg * rho_n`` with
    ``V_n = reg^2 I + sum_i x_i x_i^T``.
    """
    return reg * linear_width(norm_bound, noise_scale, reg, delta, dim, n, x_bar)


def kernel_online_width(norm_bound, noise_scale, delta, gamma_prev):
    """Online width paid in accumulated information gain:

    ``norm_bound + noise_scale * sqrt(2 * (gamma_prev + 1 + log(1 / delta)))``

    ``gamma_prev`` is the information gain of the first ``n - 1`` points and
    must be nonnegative (use the normalized gain).
    """
    _common(norm_bound, noise_scale, delta)
    check_nonnegative(gamma_prev, "gamma_prev")
    return norm_bound + noise_scale * math.sqrt(
        2.0 * (gamma_prev + 1.0 + math.log(1.0 / delta))
    )


def conjectured_width(norm_bound, noise_scale, reg, delta, dim, n, constant=1.0):
    """Conjectured online width with the constant on the noise term only:

    ``norm_bound + constant * (noise_scale / reg)
      * sqrt(dim * log(max(n, 2)) + log(1 / delta))``
    """
    _common(norm_bound, noise_scale, delta)
    check_positive(reg, "reg")
    check_positive(dim, "dim")
    check_positive(constant, "constant")
    n = _count(n)
    inner = dim * math.log(max(n, 2)) + math.log(1.0 / delta)
    return norm_bound + constant * (noise_scale / reg) * math.sqrt(inner)


SCHEDULE_KINDS = (
    "offline-fixed",
    "offline-uniform",
    "linear-online",
    "kernel-online",
    "conjectured",
    "constant",
)


@dataclass(eq=False)
class WidthSchedule:
    """A width as a function of the observation count ``n``.

    ``kind`` selects the formula; shared parameters are carried once.
    ``kernel-online`` consumes a gamma source (an array or curve object of
    values ``gamma_0 .. gamma_N``, or a per-step callable) and evaluates it
    at ``n - 1``. ``constant`` is the flat schedule ``norm_bound + constant``.
    """

    kind: str
    norm_bound: float
    noise_scale: float
    reg: float
    delta: float
    dim: int = 1
    x_bar: float = 1.0
    constant: float = 1.0
    gamma: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(
                f"unknown schedule kind {self.kind!r}; choose one of {SCHEDULE_KINDS}"
            )
        check_probability(self.delta, "delta")
        if self.kind == "kernel-online" and self.gamma is None:
            raise ValueError("kernel-online schedule needs a gamma source")
        if self.kind == "constant":
            check_nonnegative(self.constant, "constant")

    def _gamma_at(self, i):
        src = self.gamma
        if callable(src):
            return float(src(i))
        # a gain curve always feeds its normalized values to the width, no
        # matter which view it reports elsewhere: the raw view can go
        # negative and the formula needs a nonnegative gain
        values = getattr(src, "values_normalized", None)
        if values is None:
            values = getattr(src, "values", src)
        values = np.asarray(values, dtype=float)
        if i >= values.shape[0]:
            raise ValueError(
                f"gamma source has {values.shape[0]} entries; cannot evaluate at n-1={i}"
            )
        return float(values[i])

    def __call__(self, n):
        n = _count(n)
        p = self
        if p.kind == "offline-fixed":
            return offline_width(p.norm_bound, p.noise_scale, p.reg, p.delta)
        if p.kind == "offline-uniform":
            return offline_uniform_width(
                p.norm_bound, p.noise_scale, p.reg, p.delta, p.dim, n, p.constant
            )
        if p.kind == "linear-online":
            return linear_width(
                p.norm_bound, p.noise_scale, p.reg, p.delta, p.dim, n, p.x_bar
            )
        if p.kind == "kernel-online":
            return kernel_online_width(
                p.norm_bound, p.noise_scale, p.delta, self._gamma_at(max(n - 1, 0))
            )
        if p.kind == "conjectured":
            return conjectured_width(
                p.norm_bound, p.noise_scale, p.reg, p.delta, p.dim, n, p.constant
            )
        return p.norm_bound + p.constant

    def curve(self, horizon):
        """Widths at ``n = 1 .. horizon`` as an array."""
        return np.array([self(n) for n in range(1, _count(horizon) + 1)])

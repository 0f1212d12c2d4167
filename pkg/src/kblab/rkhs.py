"""Test functions of bounded kernel-space norm, plus observation noise.

A span-form function is ``f(x) = sum_i coeffs[i] * k(centers[i], x)`` with
squared norm ``coeffs^T K_m coeffs``. A feature-form function is
``f(x) = weights . psi(x)`` for a :class:`~kblab.kernels.NystromFeatures`
map, with norm ``||weights||_2``. Both satisfy the pointwise bound
``|f(x)| <= norm * sqrt(k(x, x))``.
"""

from __future__ import annotations

import json

import numpy as np

from ._validation import as_points, check_nonnegative
from .kernels import NystromFeatures, kernel_matrix, make_kernel

__all__ = [
    "RkhsFunction",
    "SpanFunction",
    "FeatureFunction",
    "sample_rkhs_function",
    "NoiseModel",
    "observe",
]


class RkhsFunction:
    """Common interface: callable on points, with an exact norm."""

    kernel = None

    def __call__(self, X):
        raise NotImplementedError

    def norm(self):
        """Exact kernel-space norm of the function."""
        raise NotImplementedError

    def _values(self, X):
        raise NotImplementedError

    def _eval(self, X):
        X = np.asarray(X, dtype=float)
        # scalar out for a single point; for dim 1 a 1-D array is a batch
        single = X.ndim == 0 or (X.ndim == 1 and self.kernel.dim > 1)
        vals = self._values(as_points(X, self.kernel.dim))
        return float(vals[0]) if single else vals


class SpanFunction(RkhsFunction):
    """Finite combination of kernel sections ``sum_i a_i k(z_i, .)``."""

    def __init__(self, kernel, centers, coeffs):
        self.kernel = kernel
        self.centers = as_points(centers, kernel.dim, name="centers")
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(-1)
        if self.coeffs.shape[0] != self.centers.shape[0]:
            raise ValueError("coeffs must have one entry per center")

    def __call__(self, X):
        return self._eval(X)

    def _values(self, X):
        return self.kernel(X, self.centers) @ self.coeffs

    def norm(self):
        K = kernel_matrix(self.kernel, self.centers)
        q = float(self.coeffs @ K @ self.coeffs)
        return float(np.sqrt(max(q, 0.0)))

    def to_dict(self):
        return {
            "form": "span",
            "kernel": _kernel_to_dict(self.kernel),
            "centers": self.centers.tolist(),
            "coeffs": self.coeffs.tolist(),
        }


class FeatureFunction(RkhsFunction):
    """Weighted combination of Nystrom features ``w . psi(.)``."""

    def __init__(self, basis, weights):
        if not isinstance(basis, NystromFeatures) or not hasattr(basis, "eigenvalues_"):
            raise ValueError("basis must be a fitted NystromFeatures map")
        self.basis = basis
        self.kernel = basis.kernel
        self.weights = np.asarray(weights, dtype=float).reshape(-1)
        if self.weights.shape[0] != basis.n_features_:
            raise ValueError(
                f"weights must have {basis.n_features_} entries, got {self.weights.shape[0]}"
            )

    def __call__(self, X):
        return self._eval(X)

    def _values(self, X):
        return self.basis.transform(X) @ self.weights

    def norm(self):
        return float(np.linalg.norm(self.weights))

    def to_dict(self):
        return {
            "form": "feature",
            "kernel": _kernel_to_dict(self.kernel),
            "landmarks": self.basis.landmarks_.tolist(),
            "weights": self.weights.tolist(),
        }


def _kernel_to_dict(kernel):
    params = kernel.get_params()
    family = {
        "SquaredExponential": "squared-exponential",
        "Matern": "matern",
        "Linear": "linear",
    }[type(kernel).__name__]
    return {"family": family, **params}


def _kernel_from_dict(d):
    d = dict(d)
    family = d.pop("family")
    return make_kernel(family, **d)


def save_function(f, path):
    """Persist a function (kernel, representation, coefficients) as JSON text."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(f.to_dict(), fh, sort_keys=True)


def load_function(path):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    kernel = _kernel_from_dict(d["kernel"])
    if d["form"] == "span":
        return SpanFunction(kernel, np.asarray(d["centers"]), np.asarray(d["coeffs"]))
    basis = NystromFeatures(kernel).fit(np.asarray(d["landmarks"]))
    return FeatureFunction(basis, np.asarray(d["weights"]))


def sample_rkhs_function(kernel, norm_bound, domain, n_centers=30, form="span", rng=None):
    """Draw a random function with kernel-space norm exactly ``norm_bound``.

    ``n_centers`` distinct grid points of ``domain`` are chosen uniformly;
    standard normal coefficients (span form) or feature weights (feature
    form) are then rescaled so the norm equals ``norm_bound``. With
    ``norm_bound = 0`` the zero function is returned.

    ``rng`` may be an integer seed, a ``numpy.random.SeedSequence``, or a
    ``Generator``; the draw is a deterministic function of it.
    """
    check_nonnegative(norm_bound, "norm_bound")
    n_centers = int(n_centers)
    if n_centers < 1:
        raise ValueError("n_centers must be a positive integer")
    grid = domain.grid()
    if n_centers > grid.shape[0]:
        raise ValueError(
            f"n_centers={n_centers} exceeds the {grid.shape[0]} available grid points"
        )
    rng = np.random.default_rng(rng)
    idx = rng.choice(grid.shape[0], size=n_centers, replace=False)
    centers = grid[np.sort(idx)]

    if form == "span":
        K = kernel_matrix(kernel, centers)
        for attempt in range(2):
            coeffs = rng.standard_normal(n_centers)
            q = float(coeffs @ K @ coeffs)
            if q > 0.0:
                break
        else:
            raise RuntimeError("degenerate draw: coefficient quadratic form vanished twice")
        if norm_bound == 0.0:
            coeffs = np.zeros(n_centers)
        else:
            coeffs = coeffs * (norm_bound / np.sqrt(q))
        return SpanFunction(kernel, centers, coeffs)

    if form == "feature":
        basis = NystromFeatures(kernel).fit(centers)
        for attempt in range(2):
            w = rng.standard_normal(basis.n_features_)
            s = float(np.linalg.norm(w))
            if s > 0.0:
                break
        else:
            raise RuntimeError("degenerate draw: zero weight vector twice")
        w = np.zeros_like(w) if norm_bound == 0.0 else w * (norm_bound / s)
        return FeatureFunction(basis, w)

    raise ValueError(f"form must be 'span' or 'feature', got {form!r}")


class NoiseModel:
    """Observation noise: centered gaussian or rademacher, scale ``scale``.

    Both kinds are sub-gaussian with parameter ``scale``. Draws consume the
    provided generator even when ``scale == 0`` so that downstream streams do
    not shift when the scale changes.
    """

    KINDS = ("gaussian", "rademacher")

    def __init__(self, kind="gaussian", scale=0.1):
        if kind not in self.KINDS:
            raise ValueError(f"noise kind must be one of {self.KINDS}, got {kind!r}")
        self.kind = kind
        self.scale = check_nonnegative(scale, "noise scale")

    def sample(self, rng, size=None):
        if self.kind == "gaussian":
            return rng.normal(0.0, self.scale, size=size)
        signs = 2.0 * rng.integers(0, 2, size=size) - 1.0
        return self.scale * signs

    def __repr__(self):
        return f"NoiseModel(kind={self.kind!r}, scale={self.scale!r})"


def observe(f, x, noise, rng):
    """One noisy evaluation ``f(x) + eps`` with ``eps`` drawn from ``noise``."""
    val = np.asarray(f(np.asarray(x, dtype=float))).reshape(-1)
    if val.size != 1:
        raise ValueError("observe expects a single point")
    return float(val[0]) + float(noise.sample(rng))

"""Positive-definite kernels, evaluation grids, and Nystrom feature maps.

Stationary kernels are parameterized by a lengthscale ``ell`` and an output
scale ``s2`` so that ``k(x, x) = s2``:

    squared-exponential: k(x, y) = s2 * exp(-||x - y||^2 / (2 ell^2))
    matern, nu = 1/2:    k(x, y) = s2 * exp(-r / ell)
    matern, nu = 3/2:    k(x, y) = s2 * (1 + sqrt(3) r / ell) * exp(-sqrt(3) r / ell)
    matern, nu = 5/2:    k(x, y) = s2 * (1 + sqrt(5) r / ell + 5 r^2 / (3 ell^2))
                                  * exp(-sqrt(5) r / ell)

with ``r = ||x - y||``. The linear kernel is ``k(x, y) = x . y`` and takes no
hyperparameters beyond the input dimension.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._validation import as_points, check_positive

__all__ = [
    "Kernel",
    "SquaredExponential",
    "Matern",
    "Linear",
    "make_kernel",
    "eval_kernel",
    "kernel_matrix",
    "Domain",
    "NystromFeatures",
]

_MATERN_ORDERS = (0.5, 1.5, 2.5)


class Kernel(BaseEstimator):
    """Base class for positive-definite kernels on R^d."""

    def __init__(self, dim=1):
        self.dim = dim

    def __call__(self, X, Y=None):
        """Return the cross-kernel matrix ``K[i, j] = k(X[i], Y[j])``.

        Parameters
        ----------
        X : array-like, shape (n, d) or (d,)
        Y : array-like, shape (m, d) or (d,), optional
            Defaults to ``X``.
        """
        raise NotImplementedError

    def diag(self, X):
        """Return ``k(x, x)`` for each row of ``X``."""
        raise NotImplementedError

    @property
    def output_scale(self):
        """Scale of the kernel diagonal, used for relative tolerances."""
        return 1.0

    def _check(self):
        if int(self.dim) < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")


class SquaredExponential(Kernel):
    """Squared-exponential (RBF) kernel.

    Parameters
    ----------
    lengthscale : float, default 1.0
        Correlation lengthscale, must be positive.
    scale : float, default 1.0
        Output variance ``s2 = k(x, x)``, must be positive.
    dim : int, default 1
        Input dimension.
    """

    def __init__(self, lengthscale=1.0, scale=1.0, dim=1):
        super().__init__(dim=dim)
        self.lengthscale = lengthscale
        self.scale = scale

    def __call__(self, X, Y=None):
        self._check()
        X = as_points(X, self.dim)
        Y = X if Y is None else as_points(Y, self.dim, name="Y")
        d2 = cdist(X, Y, metric="sqeuclidean")
        return self.scale * np.exp(-0.5 * d2 / self.lengthscale**2)

    def diag(self, X):
        self._check()
        X = as_points(X, self.dim)
        return np.full(X.shape[0], float(self.scale))

    @property
    def output_scale(self):
        return float(self.scale)

    def _check(self):
        super()._check()
        check_positive(self.lengthscale, "lengthscale")
        check_positive(self.scale, "scale")


class Matern(Kernel):
    """Matern kernel with smoothness ``nu`` in {0.5, 1.5, 2.5}."""

    def __init__(self, lengthscale=1.0, scale=1.0, nu=1.5, dim=1):
        super().__init__(dim=dim)
        self.lengthscale = lengthscale
        self.scale = scale
        self.nu = nu

    def __call__(self, X, Y=None):
        self._check()
        X = as_points(X, self.dim)
        Y = X if Y is None else as_points(Y, self.dim, name="Y")
        r = cdist(X, Y) / self.lengthscale
        if self.nu == 0.5:
            return self.scale * np.exp(-r)
        if self.nu == 1.5:
            t = np.sqrt(3.0) * r
            return self.scale * (1.0 + t) * np.exp(-t)
        t = np.sqrt(5.0) * r
        return self.scale * (1.0 + t + 5.0 * r**2 / 3.0) * np.exp(-t)

    def diag(self, X):
        self._check()
        X = as_points(X, self.dim)
        return np.full(X.shape[0], float(self.scale))

    @property
    def output_scale(self):
        return float(self.scale)

    def _check(self):
        super()._check()
        check_positive(self.lengthscale, "lengthscale")
        check_positive(self.scale, "scale")
        if self.nu not in _MATERN_ORDERS:
            raise ValueError(f"nu must be one of {_MATERN_ORDERS}, got {self.nu!r}")


class Linear(Kernel):
    """Linear kernel ``k(x, y) = x . y``."""

    def __call__(self, X, Y=None):
        self._check()
        X = as_points(X, self.dim)
        Y = X if Y is None else as_points(Y, self.dim, name="Y")
        return X @ Y.T

    def diag(self, X):
        self._check()
        X = as_points(X, self.dim)
        return np.einsum("ij,ij->i", X, X)


_FAMILIES = {
    "squared-exponential": SquaredExponential,
    "matern": Matern,
    "linear": Linear,
}


def make_kernel(family, lengthscale=1.0, scale=1.0, nu=1.5, dim=1):
    """Build a kernel by family name.

    ``family`` is one of ``squared-exponential``, ``matern``, ``linear``.
    ``nu`` applies to the Matern family only; the linear kernel ignores
    ``lengthscale`` and ``scale``.
    """
    if family not in _FAMILIES:
        known = ", ".join(sorted(_FAMILIES))
        raise ValueError(f"unknown kernel family {family!r}; choose one of: {known}")
    if family == "squared-exponential":
        k = SquaredExponential(lengthscale=lengthscale, scale=scale, dim=dim)
    elif family == "matern":
        k = Matern(lengthscale=lengthscale, scale=scale, nu=nu, dim=dim)
    else:
        k = Linear(dim=dim)
    k._check()
    return k


def eval_kernel(kernel, x, y):
    """Evaluate ``k(x, y)`` for two single points."""
    X = as_points(x, kernel.dim, name="x")
    Y = as_points(y, kernel.dim, name="y")
    if X.shape[0] != 1 or Y.shape[0] != 1:
        raise ValueError("eval_kernel expects single points; use kernel(X, Y) for batches")
    return float(kernel(X, Y)[0, 0])


def kernel_matrix(kernel, points):
    """Gram matrix of ``points``, exactly symmetric.

    The upper triangle is computed once and mirrored, so
    ``K[i, j] == K[j, i]`` holds bit for bit.
    """
    K = kernel(points)
    U = np.triu(K)
    return U + np.triu(K, 1).T


class Domain:
    """Axis-aligned box with a regular evaluation grid.

    Parameters
    ----------
    lower, upper : sequence of float
        Per-dimension closed bounds with ``lower[i] < upper[i]``.
    resolution : int
        Number of grid points per dimension; the grid has
        ``resolution ** dim`` points in row-major (first axis slowest) order.
    """

    def __init__(self, lower, upper, resolution=100):
        lower = tuple(float(v) for v in np.atleast_1d(lower))
        upper = tuple(float(v) for v in np.atleast_1d(upper))
        if len(lower) != len(upper):
            raise ValueError("lower and upper must have the same length")
        if any(lo >= hi for lo, hi in zip(lower, upper)):
            raise ValueError("each lower bound must be strictly below its upper bound")
        if int(resolution) < 1:
            raise ValueError(f"resolution must be a positive integer, got {resolution!r}")
        self.lower = lower
        self.upper = upper
        self.resolution = int(resolution)
        self._grid = None

    @property
    def dim(self):
        return len(self.lower)

    def grid(self):
        """Return the full grid as an array of shape (resolution**dim, dim)."""
        if self._grid is None:
            axes = [
                np.linspace(lo, hi, self.resolution)
                for lo, hi in zip(self.lower, self.upper)
            ]
            mesh = np.meshgrid(*axes, indexing="ij")
            self._grid = np.stack([m.ravel() for m in mesh], axis=1)
        return self._grid

    @property
    def x_bar(self):
        """Largest Euclidean norm over the grid."""
        return float(np.linalg.norm(self.grid(), axis=1).max())

    def __repr__(self):
        return f"Domain(lower={self.lower}, upper={self.upper}, resolution={self.resolution})"


class NystromFeatures(TransformerMixin, BaseEstimator):
    """Finite feature map built from the eigendecomposition of a landmark Gram.

    With landmarks ``Z`` and ``K_m = U D U^T``, the map is
    ``psi(x) = D^{-1/2} U^T k(Z, x)``; it reproduces the Gram exactly on the
    landmarks and the features are orthonormal in the kernel's function space,
    so a combination ``f = w . psi`` has norm ``||w||_2``.

    Eigenvalues of ``K_m`` in ``[-tol, 0)`` with ``tol = 1e-9 * max(diag)`` are
    clamped to zero; values below ``-tol`` raise (the Gram is not numerically
    positive semidefinite); zero directions are dropped.
    """

    def __init__(self, kernel):
        self.kernel = kernel

    def fit(self, Z, y=None):
        Z = as_points(Z, self.kernel.dim, name="Z")
        if Z.shape[0] > 1:
            gaps = cdist(Z, Z)
            np.fill_diagonal(gaps, np.inf)
            if gaps.min() <= 1e-12:
                raise ValueError("duplicate landmarks: pairwise distances must exceed 1e-12")
        K = kernel_matrix(self.kernel, Z)
        vals, vecs = np.linalg.eigh(K)
        tol = 1e-9 * max(1.0, float(np.max(np.diag(K))) if K.size else 1.0)
        if vals.size and vals[0] < -tol:
            raise ValueError(
                f"landmark Gram has eigenvalue {vals[0]:.3e} below -{tol:.1e}; "
                "not numerically positive semidefinite"
            )
        vals = np.clip(vals, 0.0, None)
        cutoff = vals.max() * 1e-12 * max(Z.shape[0], 1) if vals.size else 0.0
        keep = vals > cutoff
        order = np.argsort(vals[keep])[::-1]
        self.landmarks_ = Z
        self.eigenvalues_ = vals[keep][order]
        self.components_ = vecs[:, keep][:, order]
        self.n_features_ = int(self.eigenvalues_.size)
        return self

    def transform(self, X):
        """Feature vectors ``psi(X)`` of shape (n, n_features_)."""
        if not hasattr(self, "eigenvalues_"):
            raise NotFittedError("NystromFeatures must be fit on landmarks before transform")
        X = as_points(X, self.kernel.dim)
        K_xz = self.kernel(X, self.landmarks_)
        return (K_xz @ self.components_) / np.sqrt(self.eigenvalues_)

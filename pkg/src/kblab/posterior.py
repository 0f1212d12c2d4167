"""Regularized kernel regression posteriors with exact incremental updates.

With observations ``(x_1, y_1), ..., (x_n, y_n)``, regularizer ``reg`` and
Gram matrix ``K_n``, the surrogate keeps a Cholesky factor ``L`` of
``A_n = reg^2 I + K_n`` and reports

    mean_n(x) = k_n(x)^T A_n^{-1} y_n
    var_n(x)  = k(x, x) - k_n(x)^T A_n^{-1} k_n(x)

where ``k_n(x) = (k(x_1, x), ..., k(x_n, x))``. One new observation extends
``L`` by a single bordered row (one triangular solve), so the incremental
path matches a from-scratch dense solve to rounding error.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from sklearn.base import BaseEstimator, RegressorMixin

from ._validation import as_point, as_points, check_positive
from .kernels import kernel_matrix

__all__ = ["GaussianProcessSurrogate", "GridPosterior", "OnlineRidge"]


def _bordered_diag(arg, scale):
    """Bordering diagonal from its squared value, with a breakdown policy.

    ``arg = reg^2 + k(x, x) - ||v||^2`` is positive in exact arithmetic. A
    value at or below zero but within ``1e-9 * scale`` of it is rounded noise
    and is clamped to ``1e-12`` with a warning; anything lower means the
    factor has broken down and raises.
    """
    tol = 1e-9 * max(float(scale), 1.0)
    if arg < -tol:
        raise np.linalg.LinAlgError(
            f"incremental Cholesky breakdown: bordering argument {arg:.3e} is below -{tol:.1e}"
        )
    if arg <= 0.0:
        warnings.warn(
            "bordering argument nonpositive within tolerance; clamping to 1e-12",
            RuntimeWarning,
            stacklevel=3,
        )
        arg = 1e-12
    return float(np.sqrt(arg))


def _sample_gaussian(mean, cov, scale, rng):
    """Joint draw from N(mean, cov) with escalating diagonal jitter."""
    q = mean.shape[0]
    jitter = 1e-10 * max(float(scale), np.finfo(float).tiny)
    cap = 1e-6 * max(float(scale), np.finfo(float).tiny)
    while True:
        try:
            C = np.linalg.cholesky(cov + jitter * np.eye(q))
            break
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > cap * (1.0 + 1e-12):
                raise np.linalg.LinAlgError(
                    f"covariance not factorizable with jitter up to {cap:.1e}"
                )
    return mean + C @ rng.standard_normal(q)


class GaussianProcessSurrogate(RegressorMixin, BaseEstimator):
    """Kernel ridge posterior with O(n^2) per-observation updates.

    Parameters
    ----------
    kernel : Kernel
        Covariance function; also fixes the input dimension.
    reg : float, default 1e-3
        Regularizer added to the Gram diagonal as ``reg**2``. Must be
        positive.

    Attributes
    ----------
    X_train_ : ndarray of shape (n, d)
    y_train_ : ndarray of shape (n,)
    L_ : ndarray of shape (n, n)
        Lower Cholesky factor of ``reg^2 I + K_n``.
    coef_ : ndarray of shape (n,)
        Representer weights ``A_n^{-1} y_n``.
    """

    def __init__(self, kernel, reg=1e-3):
        self.kernel = kernel
        self.reg = reg

    # -- state management ---------------------------------------------------

    def _check_params(self):
        check_positive(self.reg, "reg")
        if not hasattr(self, "n_"):
            self._reset()

    def _reset(self, capacity=32):
        d = int(self.kernel.dim)
        self.n_ = 0
        self._cap = max(int(capacity), 1)
        self._X = np.zeros((self._cap, d))
        self._y = np.zeros(self._cap)
        self._L = np.zeros((self._cap, self._cap))
        self.coef_ = np.zeros(0)

    def _grow(self, need):
        if need <= self._cap:
            return
        new_cap = max(2 * self._cap, need)
        for name, shape in (("_X", (new_cap, self._X.shape[1])), ("_y", (new_cap,)),
                            ("_L", (new_cap, new_cap))):
            old = getattr(self, name)
            fresh = np.zeros(shape)
            fresh[tuple(slice(0, s) for s in old.shape)] = old
            setattr(self, name, fresh)
        self._cap = new_cap

    @property
    def X_train_(self):
        return self._X[: self.n_]

    @property
    def y_train_(self):
        return self._y[: self.n_]

    @property
    def L_(self):
        return self._L[: self.n_, : self.n_]

    # -- fitting ------------------------------------------------------------

    def fit(self, X, y):
        """Replace any existing state with a batch Cholesky factorization."""
        check_positive(self.reg, "reg")
        X = as_points(X, self.kernel.dim)
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y must have matching lengths")
        n = X.shape[0]
        self._reset(capacity=max(n, 32))
        A = kernel_matrix(self.kernel, X) + self.reg**2 * np.eye(n)
        L = np.linalg.cholesky(A)
        self._X[:n] = X
        self._y[:n] = y
        self._L[:n, :n] = L
        self.n_ = n
        self._refresh_coef()
        return self

    def partial_fit(self, X, y):
        """Absorb one observation (or a batch, row by row) incrementally."""
        self._check_params()
        X = as_points(X, self.kernel.dim)
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y must have matching lengths")
        for row, target in zip(X, y):
            self._append(row, float(target))
        self._refresh_coef()
        return self

    def _append(self, x, y):
        n = self.n_
        self._grow(n + 1)
        kxx = float(self.kernel.diag(x[None, :])[0])
        if n == 0:
            vsq = 0.0
            v = None
        else:
            kvec = self.kernel(self._X[:n], x[None, :])[:, 0]
            v = solve_triangular(self._L[:n, :n], kvec, lower=True)
            vsq = float(v @ v)
            self._L[n, :n] = v
        arg = self.reg**2 + kxx - vsq
        self._L[n, n] = _bordered_diag(arg, self.kernel.output_scale)
        self._X[n] = x
        self._y[n] = y
        self.n_ = n + 1

    def _refresh_coef(self):
        n = self.n_
        if n == 0:
            self.coef_ = np.zeros(0)
        else:
            self.coef_ = cho_solve((self._L[:n, :n], True), self._y[:n])

    # -- queries ------------------------------------------------------------

    def predict(self, X, return_std=False):
        """Posterior mean at ``X``; with ``return_std`` also the stddev.

        With no observations the mean is zero and the variance is the prior
        diagonal ``k(x, x)``.
        """
        self._check_params()
        X = as_points(X, self.kernel.dim)
        if self.n_ == 0:
            mean = np.zeros(X.shape[0])
            if return_std:
                return mean, np.sqrt(self.kernel.diag(X))
            return mean
        Kt = self.kernel(self.X_train_, X)
        mean = Kt.T @ self.coef_
        if not return_std:
            return mean
        return mean, np.sqrt(self._var(X, Kt))

    def predict_var(self, X):
        """Posterior variance at ``X``, clamped to ``[0, k(x, x)]``."""
        self._check_params()
        X = as_points(X, self.kernel.dim)
        if self.n_ == 0:
            return self.kernel.diag(X)
        return self._var(X, self.kernel(self.X_train_, X))

    def _var(self, X, Kt):
        V = solve_triangular(self.L_, Kt, lower=True)
        prior = self.kernel.diag(X)
        return np.clip(prior - np.einsum("ij,ij->j", V, V), 0.0, prior)

    def sample_y(self, X, rng):
        """One joint posterior draw over the rows of ``X``."""
        self._check_params()
        X = as_points(X, self.kernel.dim)
        rng = np.random.default_rng(rng)
        prior_cov = kernel_matrix(self.kernel, X)
        if self.n_ == 0:
            mean = np.zeros(X.shape[0])
            cov = prior_cov
        else:
            Kt = self.kernel(self.X_train_, X)
            mean = Kt.T @ self.coef_
            V = solve_triangular(self.L_, Kt, lower=True)
            cov = prior_cov - V.T @ V
        return _sample_gaussian(mean, cov, self.kernel.output_scale, rng)


class GridPosterior:
    """Posterior surface on a fixed evaluation set, updated in O(n G) a step.

    Maintains, for history ``X_n`` and evaluation points ``E`` of size G,
    the rows ``V = L^{-1} k(X_n, E)`` together with running mean and variance
    over ``E``. Equals :class:`GaussianProcessSurrogate` predictions on ``E``
    to rounding error; exists so per-step full-grid sweeps stay cheap.

    Updates where the new point is one of the evaluation points should pass
    ``eval_index`` (reuses the cached column, no extra solve); arbitrary
    points fall back to one O(n^2) triangular solve.
    """

    def __init__(self, kernel, reg, eval_points, capacity=64):
        self.kernel = kernel
        self.reg = check_positive(reg, "reg")
        self.eval_points = as_points(eval_points, kernel.dim, name="eval_points")
        G = self.eval_points.shape[0]
        self._prior = kernel.diag(self.eval_points)
        self.mean = np.zeros(G)
        self.var = self._prior.copy()
        self._cap = max(int(capacity), 1)
        self._V = np.zeros((self._cap, G))
        self._u = np.zeros(self._cap)
        self._L = np.zeros((self._cap, self._cap))
        self._X = np.zeros((self._cap, kernel.dim))
        self.n_ = 0
        self._prior_cov = None

    def _grow(self):
        if self.n_ < self._cap:
            return
        new_cap = 2 * self._cap
        G = self.eval_points.shape[0]
        for name, shape in (("_V", (new_cap, G)), ("_u", (new_cap,)),
                            ("_L", (new_cap, new_cap)), ("_X", (new_cap, self._X.shape[1]))):
            old = getattr(self, name)
            fresh = np.zeros(shape)
            fresh[tuple(slice(0, s) for s in old.shape)] = old
            setattr(self, name, fresh)
        self._cap = new_cap

    def update(self, x, y, eval_index=None):
        """Absorb one observation ``(x, y)``."""
        self._grow()
        n = self.n_
        x = as_point(x, self.kernel.dim)
        if eval_index is not None:
            v = self._V[:n, eval_index]
            arg = self.reg**2 + self.var[eval_index]
        else:
            kxx = float(self.kernel.diag(x[None, :])[0])
            if n == 0:
                v = np.zeros(0)
            else:
                kvec = self.kernel(self._X[:n], x[None, :])[:, 0]
                v = solve_triangular(self._L[:n, :n], kvec, lower=True)
            arg = self.reg**2 + kxx - float(v @ v)
        diag = _bordered_diag(arg, self.kernel.output_scale)
        krow = self.kernel(x[None, :], self.eval_points)[0]
        r = (krow - v @ self._V[:n]) / diag
        u_new = (float(y) - float(v @ self._u[:n])) / diag
        self._L[n, :n] = v
        self._L[n, n] = diag
        self._V[n] = r
        self._u[n] = u_new
        self._X[n] = x
        self.mean = self.mean + u_new * r
        self.var = np.clip(self.var - r * r, 0.0, self._prior)
        self.n_ = n + 1

    def std(self):
        return np.sqrt(self.var)

    def cov(self):
        """Posterior covariance over the evaluation points."""
        if self._prior_cov is None:
            self._prior_cov = kernel_matrix(self.kernel, self.eval_points)
        V = self._V[: self.n_]
        return self._prior_cov - V.T @ V

    def sample(self, rng):
        """One joint posterior draw over the evaluation points."""
        rng = np.random.default_rng(rng)
        return _sample_gaussian(self.mean, self.cov(), self.kernel.output_scale, rng)


class OnlineRidge(BaseEstimator):
    """Ridge regression accumulated one observation at a time.

    Keeps ``V = reg^2 I_d + sum_i x_i x_i^T`` and ``b = sum_i y_i x_i``; the
    weight estimate is ``V^{-1} b`` (zero before any data).
    """

    def __init__(self, dim=1, reg=1e-3):
        self.dim = dim
        self.reg = reg

    def _ensure(self):
        check_positive(self.reg, "reg")
        if int(self.dim) < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if not hasattr(self, "V_"):
            self.V_ = self.reg**2 * np.eye(int(self.dim))
            self.b_ = np.zeros(int(self.dim))
            self.n_ = 0

    def fit(self, X, y):
        """Reset accumulated state, then absorb the batch."""
        for name in ("V_", "b_", "n_"):
            if hasattr(self, name):
                delattr(self, name)
        return self.partial_fit(X, y)

    def partial_fit(self, X, y):
        self._ensure()
        X = as_points(X, int(self.dim))
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y must have matching lengths")
        for row, target in zip(X, y):
            self.V_ += np.outer(row, row)
            self.b_ += target * row
            self.n_ += 1
        return self

    @property
    def coef_(self):
        self._ensure()
        return np.linalg.solve(self.V_, self.b_)

    def predict(self, X):
        X = as_points(X, int(self.dim))
        return X @ self.coef_

    def design_norm(self, vec):
        """Norm ``sqrt(vec^T V vec)`` in the accumulated design metric."""
        self._ensure()
        vec = np.asarray(vec, dtype=float).reshape(-1)
        if vec.shape[0] != int(self.dim):
            raise ValueError(f"vec must have length {self.dim}")
        return float(np.sqrt(vec @ self.V_ @ vec))

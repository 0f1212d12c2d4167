import math
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kblab import (
    Domain,
    GaussianProcessSurrogate,
    GridPosterior,
    NoiseModel,
    OnlineRidge,
    kernel_matrix,
    make_kernel,
    observe,
    sample_rkhs_function,
)
from kblab.posterior import _bordered_diag


def dense_posterior(kernel, reg, X, y, Xq):
    """From-scratch reference: solve the regularized system with a dense LU."""
    K = kernel_matrix(kernel, X)
    A = K + reg**2 * np.eye(len(X))
    kq = kernel(Xq, X)
    coef = np.linalg.solve(A, y)
    mean = kq @ coef
    var = kernel.diag(Xq) - np.einsum("ij,ji->i", kq, np.linalg.solve(A, kq.T))
    return mean, var


def test_empty_model_is_prior():
    k = make_kernel("squared-exponential", lengthscale=0.3, scale=2.0)
    gp = GaussianProcessSurrogate(k, reg=0.1)
    Xq = np.linspace(0, 1, 5).reshape(-1, 1)
    mean, std = gp.predict(Xq, return_std=True)
    assert np.all(mean == 0.0)
    assert_allclose(std, np.sqrt(2.0), rtol=1e-14)


def test_single_observation_hand_values():
    # unit-scale kernel, reg 1: mean at the point is y/2, variance 1/2
    gp = GaussianProcessSurrogate(make_kernel("squared-exponential"), reg=1.0)
    gp.partial_fit(np.array([[0.4]]), np.array([3.0]))
    x = np.array([[0.4]])
    mean, std = gp.predict(x, return_std=True)
    assert mean[0] == pytest.approx(1.5, rel=1e-12)
    assert std[0] ** 2 == pytest.approx(0.5, rel=1e-12)


def test_repeated_observation_hand_value():
    # same point twice with y=2 each: mean 2*k/(k+reg^2) with k=1 -> 4/3
    gp = GaussianProcessSurrogate(make_kernel("squared-exponential"), reg=1.0)
    x = np.array([[0.7]])
    gp.partial_fit(x, np.array([2.0]))
    gp.partial_fit(x, np.array([2.0]))
    mean = gp.predict(x)
    assert mean[0] == pytest.approx(4.0 / 3.0, rel=1e-12)


def test_incremental_matches_dense_reference():
    rng = np.random.default_rng(21)
    k = make_kernel("squared-exponential", lengthscale=0.3)
    reg = 0.1
    grid = np.linspace(0, 1, 40).reshape(-1, 1)
    Xq = rng.uniform(size=(10, 1))
    gp = GaussianProcessSurrogate(k, reg=reg)
    X, y = [], []
    for _ in range(50):
        x = grid[rng.integers(40)]
        val = rng.normal()
        gp.partial_fit(x.reshape(1, -1), np.array([val]))
        X.append(x)
        y.append(val)
        mean_ref, var_ref = dense_posterior(k, reg, np.array(X), np.array(y), Xq)
        mean, std = gp.predict(Xq, return_std=True)
        assert np.max(np.abs(mean - mean_ref)) <= 1e-8
        assert np.max(np.abs(std**2 - var_ref)) <= 1e-8


def test_fit_equals_partial_fit_sequence():
    rng = np.random.default_rng(22)
    k = make_kernel("matern", lengthscale=0.4, nu=1.5)
    X = rng.uniform(size=(12, 1))
    y = rng.normal(size=12)
    a = GaussianProcessSurrogate(k, reg=0.2).fit(X, y)
    b = GaussianProcessSurrogate(k, reg=0.2)
    for i in range(12):
        b.partial_fit(X[i : i + 1], y[i : i + 1])
    Xq = rng.uniform(size=(7, 1))
    ma, sa = a.predict(Xq, return_std=True)
    mb, sb = b.predict(Xq, return_std=True)
    assert_allclose(ma, mb, atol=1e-10)
    assert_allclose(sa, sb, atol=1e-10)


def test_mean_is_linear_in_targets():
    rng = np.random.default_rng(23)
    k = make_kernel("squared-exponential", lengthscale=0.25)
    X = rng.uniform(size=(8, 1))
    y = rng.normal(size=8)
    Xq = rng.uniform(size=(5, 1))
    m1 = GaussianProcessSurrogate(k, reg=0.3).fit(X, y).predict(Xq)
    m2 = GaussianProcessSurrogate(k, reg=0.3).fit(X, 2.0 * y).predict(Xq)
    assert_allclose(m2, 2.0 * m1, rtol=1e-11, atol=1e-13)


def test_far_query_mean_vanishes():
    k = make_kernel("squared-exponential", lengthscale=0.2)
    gp = GaussianProcessSurrogate(k, reg=0.1).fit(np.array([[0.0]]), np.array([1.0]))
    assert abs(gp.predict(np.array([[1.0]]))[0]) <= 1e-4


def test_variance_shrinks_and_stays_in_range():
    rng = np.random.default_rng(24)
    k = make_kernel("squared-exponential", lengthscale=0.3, scale=1.7)
    gp = GaussianProcessSurrogate(k, reg=0.15)
    grid = np.linspace(0, 1, 30).reshape(-1, 1)
    prev = gp.predict_var(grid)
    assert_allclose(prev, np.full(30, 1.7), rtol=1e-13)
    for _ in range(30):
        x = rng.uniform(size=(1, 1))
        gp.partial_fit(x, rng.normal(size=1))
        var = gp.predict_var(grid)
        assert np.all(var <= prev + 1e-9)
        assert np.all(var >= 0.0)
        assert np.all(var <= 1.7 + 1e-12)
        prev = var


def test_posterior_invariant_under_data_permutation():
    rng = np.random.default_rng(25)
    k = make_kernel("matern", lengthscale=0.3, nu=2.5)
    X = rng.uniform(size=(15, 1))
    y = rng.normal(size=15)
    perm = rng.permutation(15)
    Xq = rng.uniform(size=(6, 1))
    a = GaussianProcessSurrogate(k, reg=0.2).fit(X, y)
    b = GaussianProcessSurrogate(k, reg=0.2).fit(X[perm], y[perm])
    ma, sa = a.predict(Xq, return_std=True)
    mb, sb = b.predict(Xq, return_std=True)
    assert_allclose(ma, mb, atol=1e-9)
    assert_allclose(sa, sb, atol=1e-9)


def test_noiseless_interpolation():
    rng = np.random.default_rng(26)
    domain = Domain(lower=0.0, upper=1.0, resolution=50)
    k = make_kernel("squared-exponential", lengthscale=0.3)
    f = sample_rkhs_function(k, 2.0, domain, n_centers=20, rng=rng)
    Z = f.centers
    gp = GaussianProcessSurrogate(k, reg=1e-4).fit(Z, f(Z))
    assert np.max(np.abs(gp.predict(Z) - f(Z))) <= 1e-2 * 2.0


def test_sampling_moments_and_determinism():
    k = make_kernel("squared-exponential", lengthscale=0.4, scale=1.3)
    gp = GaussianProcessSurrogate(k, reg=0.5)
    x = np.array([[0.5]])
    draws = np.array([gp.sample_y(x, np.random.default_rng(s))[0] for s in range(8000)])
    assert abs(draws.mean()) <= 4 * math.sqrt(1.3) / math.sqrt(8000)
    assert draws.var() == pytest.approx(1.3, rel=0.08)
    r1 = gp.sample_y(x, np.random.default_rng(99))
    r2 = gp.sample_y(x, np.random.default_rng(99))
    assert np.array_equal(r1, r2)


def test_joint_sample_respects_duplicates():
    k = make_kernel("squared-exponential", lengthscale=0.4)
    gp = GaussianProcessSurrogate(k, reg=0.5)
    X = np.array([[0.3], [0.3]])
    s = gp.sample_y(X, np.random.default_rng(7))
    assert abs(s[0] - s[1]) <= 1e-4


def test_reg_must_be_positive():
    with pytest.raises(ValueError):
        GaussianProcessSurrogate(make_kernel("squared-exponential"), reg=0.0).predict(np.zeros((1, 1)))
    with pytest.raises(ValueError):
        GaussianProcessSurrogate(make_kernel("squared-exponential"), reg=-0.1).predict(np.zeros((1, 1)))


def test_bordered_diag_policies():
    assert _bordered_diag(0.25, 1.0) == pytest.approx(0.5)
    with pytest.raises(np.linalg.LinAlgError):
        _bordered_diag(-1e-8, 1.0)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        d = _bordered_diag(-1e-10, 1.0)
    assert d == pytest.approx(math.sqrt(1e-12))
    assert any(issubclass(x.category, RuntimeWarning) for x in w)


class TestGridPosterior:
    def test_tracks_full_surrogate(self):
        rng = np.random.default_rng(27)
        k = make_kernel("squared-exponential", lengthscale=0.25)
        grid = np.linspace(0, 1, 35).reshape(-1, 1)
        tracker = GridPosterior(k, 0.1, grid)
        gp = GaussianProcessSurrogate(k, reg=0.1)
        for _ in range(50):
            j = rng.integers(35)
            val = rng.normal()
            tracker.update(grid[j], val, eval_index=int(j))
            gp.partial_fit(grid[j].reshape(1, -1), np.array([val]))
            mean, std = gp.predict(grid, return_std=True)
            assert np.max(np.abs(tracker.mean - mean)) <= 1e-9
            assert np.max(np.abs(tracker.std() - std)) <= 1e-9

    def test_off_grid_update_path(self):
        rng = np.random.default_rng(28)
        k = make_kernel("squared-exponential", lengthscale=0.3)
        grid = np.linspace(0, 1, 20).reshape(-1, 1)
        tracker = GridPosterior(k, 0.2, grid)
        gp = GaussianProcessSurrogate(k, reg=0.2)
        for _ in range(15):
            x = rng.uniform(size=(1,))
            val = rng.normal()
            tracker.update(x, val)
            gp.partial_fit(x.reshape(1, -1), np.array([val]))
        mean, std = gp.predict(grid, return_std=True)
        assert_allclose(tracker.mean, mean, atol=1e-9)
        assert_allclose(tracker.std(), std, atol=1e-9)

    def test_variance_clipped_to_prior_range(self):
        k = make_kernel("squared-exponential", lengthscale=0.2, scale=2.0)
        grid = np.linspace(0, 1, 10).reshape(-1, 1)
        tracker = GridPosterior(k, 0.05, grid)
        rng = np.random.default_rng(29)
        for j in range(10):
            tracker.update(grid[j], rng.normal(), eval_index=j)
        assert np.all(tracker.var >= 0.0)
        assert np.all(tracker.var <= 2.0 + 1e-12)

    def test_capacity_growth(self):
        k = make_kernel("squared-exponential", lengthscale=0.3)
        grid = np.linspace(0, 1, 6).reshape(-1, 1)
        tracker = GridPosterior(k, 0.3, grid, capacity=2)
        rng = np.random.default_rng(30)
        X, y = [], []
        for _ in range(9):
            j = int(rng.integers(6))
            val = rng.normal()
            tracker.update(grid[j], val, eval_index=j)
            X.append(grid[j])
            y.append(val)
        gp = GaussianProcessSurrogate(k, reg=0.3).fit(np.array(X), np.array(y))
        assert_allclose(tracker.mean, gp.predict(grid), atol=1e-9)


class TestOnlineRidge:
    def test_single_observation_hand_value(self):
        r = OnlineRidge(dim=1, reg=1.0)
        r.partial_fit(np.array([[1.0]]), np.array([2.0]))
        assert r.coef_[0] == pytest.approx(1.0, rel=1e-12)

    def test_matches_gp_with_linear_kernel(self):
        rng = np.random.default_rng(31)
        X = rng.normal(size=(30, 2))
        y = rng.normal(size=30)
        ridge = OnlineRidge(dim=2, reg=0.7)
        gp = GaussianProcessSurrogate(make_kernel("linear", dim=2), reg=0.7)
        for i in range(30):
            ridge.partial_fit(X[i : i + 1], y[i : i + 1])
            gp.partial_fit(X[i : i + 1], y[i : i + 1])
        Xq = rng.normal(size=(9, 2))
        assert_allclose(ridge.predict(Xq), gp.predict(Xq), atol=1e-8)

    def test_design_norm_oracle(self):
        rng = np.random.default_rng(32)
        X = rng.normal(size=(20, 2))
        y = rng.normal(size=20)
        r = OnlineRidge(dim=2, reg=0.5).fit(X, y)
        V = 0.25 * np.eye(2) + X.T @ X
        v = np.array([0.3, -1.2])
        assert r.design_norm(v) == pytest.approx(math.sqrt(v @ V @ v), rel=1e-12)

    def test_zero_data_state(self):
        r = OnlineRidge(dim=3, reg=2.0)
        assert_allclose(r.coef_, np.zeros(3))
        assert r.design_norm(np.ones(3)) == pytest.approx(2.0 * math.sqrt(3.0))

    def test_dimension_check(self):
        r = OnlineRidge(dim=2, reg=1.0)
        with pytest.raises(ValueError):
            r.partial_fit(np.array([[1.0, 2.0, 3.0]]), np.array([1.0]))

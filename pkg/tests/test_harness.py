import numpy as np
import pytest
from numpy.testing import assert_allclose

from kblab import (
    Domain,
    ExperimentConfig,
    NoiseModel,
    RegretTrace,
    ellipsoid_radius,
    linear_width,
    make_kernel,
    make_schedule,
    offline_width,
    replicate_streams,
    run_bandit,
    run_coverage,
    run_ellipsoid_check,
    sample_rkhs_function,
    summarize,
)

SE = make_kernel("squared-exponential", lengthscale=0.2)
DOMAIN = Domain(lower=0.0, upper=1.0, resolution=40)


def small_config(**overrides):
    base = dict(
        kernel=SE,
        domain=DOMAIN,
        norm_bound=1.0,
        horizon=20,
        replicates=4,
        seed=7,
        n_centers=10,
        noise=NoiseModel("gaussian", 0.1),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_replicate_streams_are_deterministic_and_distinct():
    a1, b1, c1 = replicate_streams(3, 0)
    a2, b2, c2 = replicate_streams(3, 0)
    assert a1.standard_normal(5).tolist() == a2.standard_normal(5).tolist()
    assert b1.standard_normal(5).tolist() == b2.standard_normal(5).tolist()
    assert c1.standard_normal(5).tolist() == c2.standard_normal(5).tolist()
    other = replicate_streams(3, 1)[0]
    assert not np.array_equal(
        replicate_streams(3, 0)[0].standard_normal(5), other.standard_normal(5)
    )


def test_zero_norm_bound_means_zero_regret():
    result = run_bandit(small_config(norm_bound=0.0))
    for tr in result.traces:
        assert np.all(tr.instant_regret == 0.0)
        assert np.all(tr.cumulative_regret == 0.0)
        assert tr.bound_ratio == 0.0


def test_trace_internal_consistency():
    config = small_config(policy="gp-ts")
    result = run_bandit(config)
    grid = config.domain.grid()
    for tr in result.traces:
        # prefix sums and the regret identity both hold exactly
        assert_allclose(tr.cumulative_regret, np.cumsum(tr.instant_regret), atol=0)
        assert np.all(tr.instant_regret >= -1e-12)
        fn_rng = replicate_streams(config.seed, tr.replicate)[0]
        f = sample_rkhs_function(
            config.kernel, config.norm_bound, config.domain,
            config.n_centers, config.function_form, fn_rng,
        )
        f_vals = np.asarray(f(grid))
        assert tr.best_value == pytest.approx(float(f_vals.max()), rel=1e-12)
        assert_allclose(
            tr.instant_regret, tr.best_value - f_vals[tr.chosen_index], atol=1e-12
        )
        assert_allclose(tr.points, grid[tr.chosen_index], atol=0)


def test_run_bandit_is_reproducible():
    a = run_bandit(small_config())
    b = run_bandit(small_config())
    for ta, tb in zip(a.traces, b.traces):
        assert np.array_equal(ta.chosen_index, tb.chosen_index)
        assert np.array_equal(ta.observations, tb.observations)
        assert ta.bound_ratio == tb.bound_ratio


def test_parallel_equals_serial():
    serial = run_bandit(small_config(), n_jobs=1)
    parallel = run_bandit(small_config(), n_jobs=2)
    for ts, tp in zip(serial.traces, parallel.traces):
        assert np.array_equal(ts.chosen_index, tp.chosen_index)
        assert np.array_equal(ts.observations, tp.observations)


def test_offline_design_unaffected_by_noise_kind():
    kw = dict(policy="offline-uniform-random", policy_schedule="offline-fixed")
    a = run_bandit(small_config(noise=NoiseModel("gaussian", 0.1), **kw))
    b = run_bandit(small_config(noise=NoiseModel("rademacher", 0.1), **kw))
    for ta, tb in zip(a.traces, b.traces):
        assert np.array_equal(ta.chosen_index, tb.chosen_index)
        assert not np.array_equal(ta.observations, tb.observations)


def test_coverage_report_shapes_and_ranges():
    config = small_config(
        policy="coverage-probe",
        schedules=("kernel-online", "offline-fixed"),
        replicates=6,
    )
    report = run_coverage(config)
    assert report.z.shape == (6, 20)
    assert np.all(np.isfinite(report.z))
    assert np.all(report.z >= 0.0)
    for kind in ("kernel-online", "offline-fixed"):
        assert 0.0 <= report.coverage[kind] <= 1.0
        assert report.per_step_coverage[kind].shape == (20,)
        assert report.covered_joint[kind].shape == (6,)
    assert report.z_quantiles.shape == (3, 20)
    # quantiles are ordered
    assert np.all(report.z_quantiles[0] <= report.z_quantiles[1] + 1e-12)
    assert np.all(report.z_quantiles[1] <= report.z_quantiles[2] + 1e-12)
    assert report.ratio_to_kernel_online.shape == (20,)
    assert np.all(report.ratio_to_kernel_online > 0.0)


def test_wider_schedule_covers_at_least_as_often():
    config = small_config(
        policy="offline-uniform-random",
        policy_schedule="offline-fixed",
        schedules=("constant", "offline-fixed"),
        width_constant=1e-9,
        replicates=8,
    )
    report = run_coverage(config)
    # rho_constant == B <= rho_offline everywhere, so coverage is ordered
    assert np.all(report.rho["constant"] <= report.rho["offline-fixed"])
    assert report.coverage["constant"] <= report.coverage["offline-fixed"]
    assert np.all(
        report.per_step_coverage["constant"] <= report.per_step_coverage["offline-fixed"] + 1e-12
    )


def test_noiseless_runs_are_always_covered():
    # with no noise the normalized error never exceeds the norm bound
    config = small_config(
        noise=NoiseModel("gaussian", 0.0),
        reg=1e-3,
        policy="coverage-probe",
        schedules=("constant",),
        width_constant=1e-6,
        replicates=5,
    )
    report = run_coverage(config)
    assert report.coverage["constant"] == 1.0


def test_coverage_fixed_point_modes():
    point = np.array([0.5])
    online = small_config(policy="coverage-probe", coverage_point=point, replicates=3)
    offline = small_config(
        policy="offline-grid-sweep",
        policy_schedule="offline-fixed",
        schedules=("offline-fixed",),
        coverage_point=point,
        replicates=3,
    )
    for config in (online, offline):
        report = run_coverage(config)
        assert report.z.shape == (3, 20)
        assert np.all(np.isfinite(report.z))


def test_run_coverage_reproducible():
    config = small_config(policy="gp-ucb", schedules=("kernel-online",))
    a = run_coverage(config)
    b = run_coverage(small_config(policy="gp-ucb", schedules=("kernel-online",)))
    assert np.array_equal(a.z, b.z)


class TestEllipsoid:
    def config(self, **overrides):
        base = dict(
            kernel=make_kernel("linear", dim=2),
            domain=Domain(lower=[-1.0, -1.0], upper=[1.0, 1.0], resolution=5),
            norm_bound=1.0,
            horizon=40,
            replicates=20,
            seed=11,
            n_centers=10,
            noise=NoiseModel("gaussian", 0.5),
            reg=0.5,
            policy="offline-uniform-random",
            policy_schedule="offline-fixed",
        )
        base.update(overrides)
        return ExperimentConfig(**base)

    def test_radius_matches_width_formula(self):
        config = self.config()
        report = run_ellipsoid_check(config)
        expected = ellipsoid_radius(
            1.0, 0.5, 0.5, config.delta, 2, 40, config.domain.x_bar
        )
        assert report.radius == pytest.approx(expected, rel=1e-12)
        assert report.horizon == 40

    def test_errors_nonnegative_and_mostly_covered(self):
        report = run_ellipsoid_check(self.config())
        assert np.all(report.errors >= 0.0)
        assert report.fraction >= 0.8
        assert report.fraction == pytest.approx(np.mean(report.covered))

    def test_requires_linear_kernel(self):
        with pytest.raises(ValueError, match="linear"):
            run_ellipsoid_check(small_config())

    def test_gp_ucb_design_works(self):
        report = run_ellipsoid_check(
            self.config(policy="gp-ucb", policy_schedule="linear-online", replicates=5)
        )
        assert report.errors.shape == (5,)


class TestSummarize:
    @staticmethod
    def _trace(replicate, cum, ratio=0.5):
        cum = np.asarray(cum, dtype=float)
        inst = np.diff(np.concatenate([[0.0], cum]))
        n = cum.shape[0]
        return RegretTrace(
            replicate=replicate,
            chosen_index=np.zeros(n, dtype=int),
            points=np.zeros((n, 1)),
            observations=np.zeros(n),
            post_mean=np.zeros(n),
            post_std=np.ones(n),
            instant_regret=inst,
            cumulative_regret=cum,
            best_index=0,
            best_value=0.0,
            bound_ratio=ratio,
        )

    def test_two_replicate_hand_values(self):
        rows = summarize([self._trace(0, [0.0]), self._trace(1, [2.0])])
        stats = {name: value for _, name, value in rows}
        assert stats["mean_cum_regret"] == pytest.approx(1.0)
        assert stats["stderr_cum_regret"] == pytest.approx(1.0)

    def test_single_replicate_has_zero_stderr(self):
        rows = summarize([self._trace(0, [1.0, 2.0, 3.0])])
        for _, name, value in rows:
            if name.startswith("stderr"):
                assert value == 0.0

    def test_mean_against_numpy_oracle(self):
        rng = np.random.default_rng(70)
        cums = rng.uniform(size=(6, 4)).cumsum(axis=1)
        rows = summarize([self._trace(r, cums[r]) for r in range(6)])
        by_step = {
            step: value for step, name, value in rows if name == "mean_cum_regret"
        }
        for t in range(4):
            assert by_step[t + 1] == pytest.approx(cums[:, t].mean(), rel=1e-12)

    def test_coverage_rows(self):
        report = run_coverage(small_config(policy="gp-ts", replicates=3))
        rows = summarize(report)
        names = {name for _, name, _ in rows}
        assert "z_q50" in names and "z_q90" in names and "z_q99" in names
        assert "rho_kernel-online" in names
        assert "joint_coverage_kernel-online" in names
        assert "z_median_over_rho_kernel-online" in names

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            summarize([])


class TestConfigValidation:
    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            small_config(kernel=make_kernel("squared-exponential", dim=2)).validate()

    def test_unknown_policy(self):
        with pytest.raises(ValueError, match="policy"):
            small_config(policy="epsilon-greedy").validate()

    def test_duplicate_schedules(self):
        with pytest.raises(ValueError, match="repeat"):
            small_config(schedules=("constant", "constant")).validate()

    def test_n_centers_exceeds_grid(self):
        with pytest.raises(ValueError, match="n_centers"):
            small_config(n_centers=100).validate()

    def test_coverage_point_dimension(self):
        with pytest.raises(ValueError):
            small_config(coverage_point=np.array([0.5, 0.5]))

    def test_reg_default_tracks_noise(self):
        assert small_config(noise=NoiseModel("gaussian", 0.25)).reg == 0.25
        assert small_config(noise=NoiseModel("gaussian", 0.0)).reg == 1e-3

    def test_make_schedule_reads_domain_geometry(self):
        config = small_config(
            kernel=make_kernel("linear", dim=1),
            domain=Domain(lower=-2.0, upper=1.0, resolution=10),
        )
        s = make_schedule("linear-online", config)
        expected = linear_width(
            config.norm_bound, config.noise.scale, config.reg, config.delta,
            dim=1, n=5, x_bar=2.0,
        )
        assert s(5) == pytest.approx(expected, rel=1e-14)
        fixed = make_schedule("offline-fixed", config)
        assert fixed(1) == pytest.approx(
            offline_width(config.norm_bound, config.noise.scale, config.reg, config.delta)
        )

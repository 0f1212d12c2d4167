"""Seeded Monte Carlo experiments: regret runs, coverage runs, weight sets.

Replicate ``r`` of a run with master seed ``s`` derives three independent
generator streams from ``SeedSequence(s, spawn_key=(r,))``: one for the
target function draw, one for the policy (posterior sampling, offline
designs), one for observation noise. Results are therefore a pure function
of (config, r): replicates can run serially or in a process pool with
identical output, and changing the noise model never changes an offline
design.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import as_point, check_nonnegative, check_positive, check_probability
from .info_gain import MODES, greedy_max_info_gain
from .kernels import Domain, Kernel, Linear
from .policies import POLICY_KINDS, is_online, offline_design, probe_pick, ucb_pick
from .posterior import GridPosterior, OnlineRidge
from .rkhs import NoiseModel, SpanFunction, sample_rkhs_function
from .widths import SCHEDULE_KINDS, WidthSchedule, ellipsoid_radius

__all__ = [
    "ExperimentConfig",
    "RegretTrace",
    "BanditResult",
    "CoverageReport",
    "EllipsoidReport",
    "replicate_streams",
    "make_schedule",
    "run_bandit",
    "run_coverage",
    "run_ellipsoid_check",
    "summarize",
]

QUANTILE_LEVELS = (0.5, 0.9, 0.99)


@dataclass
class ExperimentConfig:
    """Everything a run needs; validated once at run entry.

    ``reg`` defaults to ``max(noise.scale, 1e-3)`` when not given.
    """

    kernel: Kernel
    domain: Domain
    norm_bound: float
    horizon: int
    replicates: int
    seed: int
    n_centers: int = 30
    function_form: str = "span"
    noise: NoiseModel = field(default_factory=lambda: NoiseModel("gaussian", 0.1))
    reg: Optional[float] = None
    policy: str = "gp-ucb"
    policy_schedule: str = "kernel-online"
    schedules: tuple = ("kernel-online",)
    delta: float = 0.1
    width_constant: float = 1.0
    sigma_floor: float = 1e-6
    coverage_point: Optional[np.ndarray] = None
    info_gain_mode: str = "normalized"
    out_dir: Optional[str] = None

    def __post_init__(self):
        if self.reg is None:
            self.reg = max(self.noise.scale, 1e-3)
        self.schedules = tuple(self.schedules)
        if self.coverage_point is not None:
            self.coverage_point = as_point(
                self.coverage_point, self.kernel.dim, name="coverage_point"
            )

    def validate(self):
        if self.kernel.dim != self.domain.dim:
            raise ValueError("kernel and domain dimensions disagree")
        check_nonnegative(self.norm_bound, "norm_bound")
        check_positive(self.reg, "reg")
        check_probability(self.delta, "delta")
        check_positive(self.width_constant, "width_constant")
        check_positive(self.sigma_floor, "sigma_floor")
        if int(self.horizon) < 1:
            raise ValueError("horizon must be a positive integer")
        if int(self.replicates) < 1:
            raise ValueError("replicates must be a positive integer")
        if int(self.seed) < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.function_form not in ("span", "feature"):
            raise ValueError(f"function_form must be 'span' or 'feature', got {self.function_form!r}")
        if self.policy not in POLICY_KINDS:
            raise ValueError(f"policy must be one of {POLICY_KINDS}, got {self.policy!r}")
        if self.policy_schedule not in SCHEDULE_KINDS:
            raise ValueError(
                f"policy_schedule must be one of {SCHEDULE_KINDS}, got {self.policy_schedule!r}"
            )
        if not self.schedules:
            raise ValueError("schedules must name at least one width schedule")
        for kind in self.schedules:
            if kind not in SCHEDULE_KINDS:
                raise ValueError(f"unknown schedule kind {kind!r} in schedules")
        if len(set(self.schedules)) != len(self.schedules):
            raise ValueError("schedules must not repeat a kind")
        if self.info_gain_mode not in MODES:
            raise ValueError(f"info_gain_mode must be one of {MODES}")
        if int(self.n_centers) < 1:
            raise ValueError("n_centers must be a positive integer")
        n_grid = self.domain.grid().shape[0]
        if int(self.n_centers) > n_grid:
            raise ValueError(f"n_centers={self.n_centers} exceeds the grid size {n_grid}")
        return self


@dataclass(eq=False)
class RegretTrace:
    """Per-step record of one bandit replicate."""

    replicate: int
    chosen_index: np.ndarray
    points: np.ndarray
    observations: np.ndarray
    post_mean: np.ndarray
    post_std: np.ndarray
    instant_regret: np.ndarray
    cumulative_regret: np.ndarray
    best_index: int
    best_value: float
    bound_ratio: float


@dataclass(eq=False)
class BanditResult:
    traces: list
    gamma: object
    schedule: WidthSchedule


@dataclass(eq=False)
class CoverageReport:
    """Normalized-error trajectories against each width schedule.

    ``z[r, n-1]`` is the worst normalized error after ``n`` observations in
    replicate ``r`` (or the fixed-point error when the run targets a single
    point). ``covered_joint[kind][r]`` is 1 when ``z <= rho`` held at every
    step of replicate ``r``.
    """

    z: np.ndarray
    rho: dict
    coverage: dict
    covered_joint: dict
    per_step_coverage: dict
    z_quantiles: np.ndarray
    quantile_levels: tuple = QUANTILE_LEVELS
    ratio_to_kernel_online: Optional[np.ndarray] = None


@dataclass(eq=False)
class EllipsoidReport:
    errors: np.ndarray
    radius: float
    covered: np.ndarray
    fraction: float
    horizon: int = 0


def replicate_streams(seed, r):
    """Three deterministic generator streams for replicate ``r``."""
    base = np.random.SeedSequence(int(seed), spawn_key=(int(r),))
    fn_ss, policy_ss, noise_ss = base.spawn(3)
    return (
        np.random.default_rng(fn_ss),
        np.random.default_rng(policy_ss),
        np.random.default_rng(noise_ss),
    )


def make_schedule(kind, config, gamma=None):
    """Width schedule of ``kind`` with parameters taken from ``config``."""
    return WidthSchedule(
        kind=kind,
        norm_bound=config.norm_bound,
        noise_scale=config.noise.scale,
        reg=config.reg,
        delta=config.delta,
        dim=config.kernel.dim,
        x_bar=config.domain.x_bar,
        constant=config.width_constant,
        gamma=gamma,
    )


def _gamma_curve(config):
    """Greedy gain curve on the domain grid, computed once per run."""
    return greedy_max_info_gain(
        config.kernel, config.reg, config.domain.grid(), int(config.horizon),
        mode=config.info_gain_mode,
    )


def _needs_gamma(config, kinds):
    if "kernel-online" in kinds:
        return True
    return config.policy == "gp-ucb" and config.policy_schedule == "kernel-online"


def _map_replicates(worker, payloads, n_jobs):
    if n_jobs is None or int(n_jobs) <= 1:
        return [worker(p) for p in payloads]
    from concurrent.futures import ProcessPoolExecutor

    n_jobs = int(n_jobs)
    chunk = max(1, len(payloads) // (4 * n_jobs))
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(worker, payloads, chunksize=chunk))


def _pick(config, tracker, n_grid, f_vals, schedule, offline, policy_rng, t):
    """Grid index chosen at step ``t`` (posterior holds ``t`` observations)."""
    if offline is not None:
        return int(offline[t])
    if config.policy == "gp-ucb":
        return ucb_pick(tracker.mean[:n_grid], tracker.std()[:n_grid], schedule(t))
    if config.policy == "gp-ts":
        return int(np.argmax(tracker.sample(policy_rng)[:n_grid]))
    return probe_pick(
        f_vals, tracker.mean[:n_grid], tracker.std()[:n_grid], config.sigma_floor
    )


def _bandit_replicate(args):
    config, schedule, gamma_last, r = args
    grid = config.domain.grid()
    horizon = int(config.horizon)
    fn_rng, policy_rng, noise_rng = replicate_streams(config.seed, r)
    f = sample_rkhs_function(
        config.kernel, config.norm_bound, config.domain,
        config.n_centers, config.function_form, fn_rng,
    )
    f_vals = np.asarray(f(grid), dtype=float)
    best_index = int(np.argmax(f_vals))
    best_value = float(f_vals[best_index])

    tracker = GridPosterior(config.kernel, config.reg, grid, capacity=horizon + 1)
    offline = None
    if not is_online(config.policy):
        offline = offline_design(config.policy, grid.shape[0], horizon, policy_rng)

    chosen = np.zeros(horizon, dtype=int)
    ys = np.zeros(horizon)
    mus = np.zeros(horizon)
    stds = np.zeros(horizon)
    for t in range(horizon):
        j = _pick(config, tracker, grid.shape[0], f_vals, schedule, offline, policy_rng, t)
        y = f_vals[j] + float(config.noise.sample(noise_rng))
        tracker.update(grid[j], y, eval_index=j)
        chosen[t] = j
        ys[t] = y
        mus[t] = tracker.mean[j]
        stds[t] = float(np.sqrt(tracker.var[j]))

    inst = best_value - f_vals[chosen]
    cum = np.cumsum(inst)
    denom = schedule(horizon) * np.sqrt(horizon * gamma_last)
    ratio = float(cum[-1] / denom) if denom > 0 else float("nan")
    return RegretTrace(
        replicate=int(r),
        chosen_index=chosen,
        points=grid[chosen],
        observations=ys,
        post_mean=mus,
        post_std=stds,
        instant_regret=inst,
        cumulative_regret=cum,
        best_index=best_index,
        best_value=best_value,
        bound_ratio=ratio,
    )


def run_bandit(config, n_jobs=1):
    """Regret run: one trace per replicate under the configured policy."""
    config.validate()
    gamma = _gamma_curve(config)
    schedule = make_schedule(
        config.policy_schedule, config,
        gamma=gamma if config.policy_schedule == "kernel-online" else None,
    )
    gamma_last = float(gamma.values_normalized[int(config.horizon)])
    payloads = [(config, schedule, gamma_last, r) for r in range(int(config.replicates))]
    traces = _map_replicates(_bandit_replicate, payloads, n_jobs)
    return BanditResult(traces=traces, gamma=gamma, schedule=schedule)


def _coverage_replicate(args):
    config, policy_schedule, r = args
    grid = config.domain.grid()
    n_grid = grid.shape[0]
    horizon = int(config.horizon)
    online = is_online(config.policy)
    fn_rng, policy_rng, noise_rng = replicate_streams(config.seed, r)
    f = sample_rkhs_function(
        config.kernel, config.norm_bound, config.domain,
        config.n_centers, config.function_form, fn_rng,
    )
    f_vals = np.asarray(f(grid), dtype=float)

    point = config.coverage_point
    if point is None:
        eval_points = grid
        point_value = None
        point_col = None
    elif online:
        eval_points = np.vstack([grid, point[None, :]])
        point_value = float(np.asarray(f(point[None, :]))[0])
        point_col = n_grid
    else:
        eval_points = point[None, :]
        point_value = float(np.asarray(f(point[None, :]))[0])
        point_col = 0

    tracker = GridPosterior(config.kernel, config.reg, eval_points, capacity=horizon + 1)
    offline = None
    if not online:
        offline = offline_design(config.policy, n_grid, horizon, policy_rng)

    floor = config.sigma_floor
    z = np.zeros(horizon)
    for t in range(horizon):
        j = _pick(config, tracker, n_grid, f_vals, policy_schedule, offline, policy_rng, t)
        y = f_vals[j] + float(config.noise.sample(noise_rng))
        if point is not None and not online:
            tracker.update(grid[j], y)  # the chosen point is not an evaluation point
        else:
            tracker.update(grid[j], y, eval_index=j)
        std = tracker.std()
        if point is None:
            field = np.abs(f_vals - tracker.mean) / np.maximum(std, floor)
            z[t] = float(field.max())
        else:
            err = abs(point_value - tracker.mean[point_col])
            z[t] = float(err / max(std[point_col], floor))
    return z


def run_coverage(config, n_jobs=1):
    """Coverage run: worst normalized errors versus each width schedule."""
    config.validate()
    kinds = tuple(config.schedules)
    gamma = _gamma_curve(config) if _needs_gamma(config, kinds) else None
    schedules = {
        kind: make_schedule(kind, config, gamma=gamma if kind == "kernel-online" else None)
        for kind in kinds
    }
    policy_schedule = None
    if config.policy == "gp-ucb":
        policy_schedule = make_schedule(
            config.policy_schedule, config,
            gamma=gamma if config.policy_schedule == "kernel-online" else None,
        )
    payloads = [(config, policy_schedule, r) for r in range(int(config.replicates))]
    rows = _map_replicates(_coverage_replicate, payloads, n_jobs)
    z = np.stack(rows, axis=0)

    horizon = int(config.horizon)
    rho = {kind: sched.curve(horizon) for kind, sched in schedules.items()}
    covered_joint = {}
    coverage = {}
    per_step = {}
    for kind, curve in rho.items():
        hit = z <= curve[None, :]
        covered_joint[kind] = hit.all(axis=1)
        coverage[kind] = float(covered_joint[kind].mean())
        per_step[kind] = hit.mean(axis=0)
    z_quantiles = np.quantile(z, QUANTILE_LEVELS, axis=0)
    ratio = None
    if "kernel-online" in rho:
        ratio = np.median(z, axis=0) / rho["kernel-online"]
    return CoverageReport(
        z=z,
        rho=rho,
        coverage=coverage,
        covered_joint=covered_joint,
        per_step_coverage=per_step,
        z_quantiles=z_quantiles,
        ratio_to_kernel_online=ratio,
    )


def _linear_weight(f):
    """Exact weight vector of a span-form function under the linear kernel."""
    if not isinstance(f, SpanFunction) or not isinstance(f.kernel, Linear):
        raise ValueError("weight extraction needs a span-form function with a linear kernel")
    return f.centers.T @ f.coeffs


def _ellipsoid_replicate(args):
    config, policy_schedule, r = args
    grid = config.domain.grid()
    horizon = int(config.horizon)
    online = is_online(config.policy)
    fn_rng, policy_rng, noise_rng = replicate_streams(config.seed, r)
    f = sample_rkhs_function(
        config.kernel, config.norm_bound, config.domain,
        config.n_centers, "span", fn_rng,
    )
    w_true = _linear_weight(f)
    f_vals = np.asarray(f(grid), dtype=float)

    ridge = OnlineRidge(dim=config.kernel.dim, reg=config.reg)
    tracker = None
    offline = None
    if online:
        tracker = GridPosterior(config.kernel, config.reg, grid, capacity=horizon + 1)
    else:
        offline = offline_design(config.policy, grid.shape[0], horizon, policy_rng)
    for t in range(horizon):
        if online:
            j = _pick(config, tracker, grid.shape[0], f_vals, policy_schedule, None,
                      policy_rng, t)
        else:
            j = int(offline[t])
        y = f_vals[j] + float(config.noise.sample(noise_rng))
        ridge.partial_fit(grid[j], y)
        if online:
            tracker.update(grid[j], y, eval_index=j)
    return float(ridge.design_norm(w_true - ridge.coef_))


def run_ellipsoid_check(config, n_jobs=1):
    """Weight-set run: fraction of replicates whose true weights stay inside
    the design-metric ball of radius ``reg * linear width`` after the run."""
    config.validate()
    if not isinstance(config.kernel, Linear):
        raise ValueError("the weight-set check requires the linear kernel")
    gamma = _gamma_curve(config) if _needs_gamma(config, ()) else None
    policy_schedule = None
    if config.policy == "gp-ucb":
        policy_schedule = make_schedule(
            config.policy_schedule, config,
            gamma=gamma if config.policy_schedule == "kernel-online" else None,
        )
    payloads = [(config, policy_schedule, r) for r in range(int(config.replicates))]
    errors = np.array(_map_replicates(_ellipsoid_replicate, payloads, n_jobs))
    radius = ellipsoid_radius(
        config.norm_bound, config.noise.scale, config.reg, config.delta,
        config.kernel.dim, int(config.horizon), config.domain.x_bar,
    )
    covered = errors <= radius
    return EllipsoidReport(
        errors=errors, radius=float(radius), covered=covered,
        fraction=float(covered.mean()), horizon=int(config.horizon),
    )


def _stderr(values):
    values = np.asarray(values, dtype=float)
    if values.shape[0] <= 1:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(values.shape[0]))


def summarize(result):
    """Aggregate a run into (step, statistic, value) rows.

    Accepts a :class:`BanditResult`, a list of :class:`RegretTrace`, a
    :class:`CoverageReport`, or an :class:`EllipsoidReport`.
    """
    if isinstance(result, BanditResult):
        result = result.traces
    if isinstance(result, CoverageReport):
        return _summarize_coverage(result)
    if isinstance(result, EllipsoidReport):
        return _summarize_ellipsoid(result)
    traces = list(result)
    if not traces:
        raise ValueError("nothing to summarize")
    horizon = traces[0].cumulative_regret.shape[0]
    cum = np.stack([tr.cumulative_regret for tr in traces])
    inst = np.stack([tr.instant_regret for tr in traces])
    rows = []
    for t in range(horizon):
        step = t + 1
        rows.append((step, "mean_cum_regret", float(cum[:, t].mean())))
        rows.append((step, "stderr_cum_regret", _stderr(cum[:, t])))
        rows.append((step, "mean_inst_regret", float(inst[:, t].mean())))
    ratios = np.array([tr.bound_ratio for tr in traces])
    rows.append((horizon, "mean_bound_ratio", float(np.mean(ratios))))
    rows.append((horizon, "stderr_bound_ratio", _stderr(ratios)))
    return rows


def _summarize_coverage(report):
    horizon = report.z.shape[1]
    rows = []
    for t in range(horizon):
        step = t + 1
        for level, curve in zip(report.quantile_levels, report.z_quantiles):
            rows.append((step, f"z_q{int(round(level * 100))}", float(curve[t])))
        for kind, curve in report.rho.items():
            rows.append((step, f"rho_{kind}", float(curve[t])))
            rows.append((step, f"coverage_{kind}", float(report.per_step_coverage[kind][t])))
        if report.ratio_to_kernel_online is not None:
            rows.append(
                (step, "z_median_over_rho_kernel-online",
                 float(report.ratio_to_kernel_online[t]))
            )
    for kind, value in report.coverage.items():
        rows.append((horizon, f"joint_coverage_{kind}", float(value)))
    return rows


def _summarize_ellipsoid(report):
    step = int(report.horizon)
    return [
        (step, "coverage_fraction", report.fraction),
        (step, "radius", report.radius),
        (step, "mean_error", float(report.errors.mean())),
        (step, "stderr_error", _stderr(report.errors)),
    ]

"""kblab: a small laboratory for kernelized bandit experiments.

Building blocks: kernels and grids, random functions of known kernel-space
norm, incrementally updated posteriors, confidence-width schedules,
information-gain curves, selection policies, and a seeded Monte Carlo harness
with a CLI front end.
"""

__version__ = "0.1.0"

from .harness import (
    BanditResult,
    CoverageReport,
    EllipsoidReport,
    ExperimentConfig,
    RegretTrace,
    make_schedule,
    replicate_streams,
    run_bandit,
    run_coverage,
    run_ellipsoid_check,
    summarize,
)
from .info_gain import (
    InfoGainCurve,
    brute_force_max_info_gain,
    greedy_max_info_gain,
    info_gain_of_set,
)
from .kernels import (
    Domain,
    Linear,
    Matern,
    NystromFeatures,
    SquaredExponential,
    eval_kernel,
    kernel_matrix,
    make_kernel,
)
from .policies import (
    OFFLINE_KINDS,
    ONLINE_KINDS,
    POLICY_KINDS,
    PolicySpec,
    is_online,
    offline_design,
    probe_next,
    probe_pick,
    ts_next,
    ucb_next,
    ucb_pick,
)
from .posterior import GaussianProcessSurrogate, GridPosterior, OnlineRidge
from .rkhs import (
    FeatureFunction,
    NoiseModel,
    SpanFunction,
    load_function,
    observe,
    sample_rkhs_function,
    save_function,
)
from .widths import (
    SCHEDULE_KINDS,
    WidthSchedule,
    conjectured_width,
    ellipsoid_radius,
    kernel_online_width,
    linear_width,
    offline_uniform_width,
    offline_width,
)
from .config import ConfigError, canonical_text, config_hash, load_config, parse_config

__all__ = [name for name in dir() if not name.startswith("_")]

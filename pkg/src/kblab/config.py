"""Flat ``key = value`` experiment configs: parse, canonicalize, hash.

Grammar: one ``key = value`` pair per line; blank lines and lines starting
with ``#`` are ignored; keys may not repeat; unknown keys are errors (with a
suggestion when one is obvious). Floats are serialized with 17 significant
digits, so canonical text round-trips exactly: parsing the canonical form of
a config yields the same config, and its SHA-256 is a stable run identity.
"""

from __future__ import annotations

import difflib
import hashlib

from .harness import ExperimentConfig
from .kernels import Domain, make_kernel
from .rkhs import NoiseModel

__all__ = [
    "ConfigError",
    "parse_config",
    "load_config",
    "canonical_text",
    "config_hash",
    "REQUIRED_KEYS",
    "KEY_ORDER",
]


class ConfigError(ValueError):
    """A config file problem; the CLI maps it to exit code 2."""


REQUIRED_KEYS = ("kernel", "norm_bound", "noise_scale", "delta", "horizon", "replicates", "seed")

KEY_ORDER = (
    "kernel",
    "lengthscale",
    "output_scale",
    "nu",
    "dim",
    "domain_lower",
    "domain_upper",
    "grid_resolution",
    "norm_bound",
    "n_centers",
    "function_form",
    "noise",
    "noise_scale",
    "regularization",
    "policy",
    "policy_schedule",
    "schedules",
    "delta",
    "width_constant",
    "sigma_floor",
    "horizon",
    "replicates",
    "seed",
    "coverage_point",
    "info_gain_mode",
    "out_dir",
)

# Names people reach for first, mapped to the key this format actually uses.
_SUGGESTIONS = {
    "sigma": "noise_scale",
    "r": "noise_scale",
    "noise_std": "noise_scale",
    "lambda": "regularization",
    "lam": "regularization",
    "reg": "regularization",
    "b": "norm_bound",
    "rkhs_norm": "norm_bound",
    "n": "horizon",
    "steps": "horizon",
    "m": "replicates",
    "ell": "lengthscale",
    "resolution": "grid_resolution",
}


def _fmt(value):
    return f"{float(value):.17g}"


def _split_lines(text):
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected `key = value`, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key `{key}`")
        pairs[key] = value
    return pairs


def _reject_unknown(pairs):
    for key in pairs:
        if key in KEY_ORDER:
            continue
        hint = _SUGGESTIONS.get(key.lower())
        if hint is None:
            close = difflib.get_close_matches(key, KEY_ORDER, n=1)
            hint = close[0] if close else None
        suffix = f"; did you mean `{hint}`?" if hint else ""
        raise ConfigError(f"unknown key `{key}`{suffix}")


def _get_float(pairs, key, default=None):
    if key not in pairs:
        return default
    try:
        return float(pairs[key])
    except ValueError:
        raise ConfigError(f"key `{key}`: expected a number, got {pairs[key]!r}") from None


def _get_int(pairs, key, default=None):
    if key not in pairs:
        return default
    value = pairs[key]
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"key `{key}`: expected an integer, got {value!r}") from None


def _get_floats(pairs, key, default=None):
    if key not in pairs:
        return default
    try:
        return tuple(float(tok) for tok in pairs[key].split(",") if tok.strip() != "")
    except ValueError:
        raise ConfigError(
            f"key `{key}`: expected comma-separated numbers, got {pairs[key]!r}"
        ) from None


def parse_config(text):
    """Parse config text into a validated :class:`ExperimentConfig`."""
    pairs = _split_lines(text)
    _reject_unknown(pairs)
    for key in REQUIRED_KEYS:
        if key not in pairs:
            raise ConfigError(f"missing required key `{key}`")

    family = pairs["kernel"]
    dim = _get_int(pairs, "dim", 1)
    if "nu" in pairs and family != "matern":
        raise ConfigError("key `nu` applies to the matern family only")
    try:
        kernel = make_kernel(
            family,
            lengthscale=_get_float(pairs, "lengthscale", 1.0),
            scale=_get_float(pairs, "output_scale", 1.0),
            nu=_get_float(pairs, "nu", 1.5),
            dim=dim,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    lower = _get_floats(pairs, "domain_lower", (0.0,))
    upper = _get_floats(pairs, "domain_upper", (1.0,))
    if len(lower) == 1 and dim > 1:
        lower = lower * dim
    if len(upper) == 1 and dim > 1:
        upper = upper * dim
    if len(lower) != dim or len(upper) != dim:
        raise ConfigError("domain_lower/domain_upper must have one value per dimension")
    try:
        domain = Domain(lower, upper, _get_int(pairs, "grid_resolution", 100))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    noise_scale = _get_float(pairs, "noise_scale")
    try:
        noise = NoiseModel(pairs.get("noise", "gaussian"), noise_scale)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    schedules = tuple(
        tok.strip() for tok in pairs.get("schedules", "kernel-online").split(",") if tok.strip()
    )
    coverage_point = _get_floats(pairs, "coverage_point", None)
    out_dir = pairs.get("out_dir") or None

    try:
        config = ExperimentConfig(
            kernel=kernel,
            domain=domain,
            norm_bound=_get_float(pairs, "norm_bound"),
            horizon=_get_int(pairs, "horizon"),
            replicates=_get_int(pairs, "replicates"),
            seed=_get_int(pairs, "seed"),
            n_centers=_get_int(pairs, "n_centers", 30),
            function_form=pairs.get("function_form", "span"),
            noise=noise,
            reg=_get_float(pairs, "regularization", None),
            policy=pairs.get("policy", "gp-ucb"),
            policy_schedule=pairs.get("policy_schedule", "kernel-online"),
            schedules=schedules,
            delta=_get_float(pairs, "delta"),
            width_constant=_get_float(pairs, "width_constant", 1.0),
            sigma_floor=_get_float(pairs, "sigma_floor", 1e-6),
            coverage_point=coverage_point,
            info_gain_mode=pairs.get("info_gain_mode", "normalized"),
            out_dir=out_dir,
        )
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return parse_config(text)


def canonical_text(config):
    """Serialize a config with resolved defaults, fixed key order, and
    17-significant-digit floats. Optional keys with no value are omitted."""
    kernel = config.kernel
    family = {
        "SquaredExponential": "squared-exponential",
        "Matern": "matern",
        "Linear": "linear",
    }[type(kernel).__name__]
    items = [
        ("kernel", family),
        ("lengthscale", _fmt(getattr(kernel, "lengthscale", 1.0))),
        ("output_scale", _fmt(getattr(kernel, "scale", 1.0))),
    ]
    if family == "matern":
        items.append(("nu", _fmt(kernel.nu)))
    items.extend(
        [
            ("dim", str(kernel.dim)),
            ("domain_lower", ",".join(_fmt(v) for v in config.domain.lower)),
            ("domain_upper", ",".join(_fmt(v) for v in config.domain.upper)),
            ("grid_resolution", str(config.domain.resolution)),
            ("norm_bound", _fmt(config.norm_bound)),
            ("n_centers", str(int(config.n_centers))),
            ("function_form", config.function_form),
            ("noise", config.noise.kind),
            ("noise_scale", _fmt(config.noise.scale)),
            ("regularization", _fmt(config.reg)),
            ("policy", config.policy),
            ("policy_schedule", config.policy_schedule),
            ("schedules", ",".join(config.schedules)),
            ("delta", _fmt(config.delta)),
            ("width_constant", _fmt(config.width_constant)),
            ("sigma_floor", _fmt(config.sigma_floor)),
            ("horizon", str(int(config.horizon))),
            ("replicates", str(int(config.replicates))),
            ("seed", str(int(config.seed))),
        ]
    )
    if config.coverage_point is not None:
        items.append(("coverage_point", ",".join(_fmt(v) for v in config.coverage_point)))
    items.append(("info_gain_mode", config.info_gain_mode))
    if config.out_dir:
        items.append(("out_dir", config.out_dir))
    return "".join(f"{k} = {v}\n" for k, v in items)


def config_hash(config):
    """SHA-256 hex digest of the canonical config text."""
    text = config if isinstance(config, str) else canonical_text(config)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()

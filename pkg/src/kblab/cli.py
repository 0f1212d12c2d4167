"""Command line entry points.

Subcommands: ``run-bandit``, ``run-coverage``, ``run-ellipsoid``,
``info-gain``, ``validate-config``, ``version``. Exit codes: 0 on success,
2 on a config problem, 1 on a runtime failure. Output files are written
atomically (temp file in the target directory, then rename); every run also
writes a ``manifest.txt`` recording the config hash, tool version,
timestamps, and the SHA-256 of each output file.

The output directory is ``--out`` if given, else ``$KBL_OUT_DIR``, else the
config's ``out_dir``, else the working directory.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import tempfile
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import ConfigError, canonical_text, config_hash, load_config
from .harness import run_bandit, run_coverage, run_ellipsoid_check, summarize
from .info_gain import greedy_max_info_gain

__all__ = ["main", "entry"]


def _fmt(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _csv(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _atomic_write(path, text):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=os.path.basename(path) + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _summary_csv(rows):
    return _csv(["step", "statistic", "value"], [(s, name, v) for s, name, v in rows])


def _bandit_files(config, n_jobs):
    result = run_bandit(config, n_jobs=n_jobs)
    dim = config.kernel.dim
    header = (
        ["replicate", "step"]
        + [f"x{i}" for i in range(dim)]
        + ["y", "inst_regret", "cum_regret", "mu", "sigma"]
    )
    rows = []
    for tr in result.traces:
        for t in range(tr.points.shape[0]):
            rows.append(
                (tr.replicate, t + 1, *tr.points[t], tr.observations[t],
                 tr.instant_regret[t], tr.cumulative_regret[t],
                 tr.post_mean[t], tr.post_std[t])
            )
    return {
        "regret.csv": _csv(header, rows),
        "regret_summary.csv": _summary_csv(summarize(result)),
    }


def _coverage_files(config, n_jobs):
    report = run_coverage(config, n_jobs=n_jobs)
    kinds = list(config.schedules)
    header = (
        ["replicate", "step", "Z"]
        + [f"rho_{k}" for k in kinds]
        + [f"covered_{k}" for k in kinds]
    )
    rows = []
    n_rep, horizon = report.z.shape
    for r in range(n_rep):
        for t in range(horizon):
            z = report.z[r, t]
            rho = [report.rho[k][t] for k in kinds]
            covered = [int(z <= v) for v in rho]
            rows.append((r, t + 1, z, *rho, *covered))
    return {
        "coverage.csv": _csv(header, rows),
        "coverage_summary.csv": _summary_csv(summarize(report)),
    }


def _ellipsoid_files(config, n_jobs):
    report = run_ellipsoid_check(config, n_jobs=n_jobs)
    rows = [
        (r, report.errors[r], report.radius, int(report.covered[r]))
        for r in range(report.errors.shape[0])
    ]
    return {
        "ellipsoid.csv": _csv(["replicate", "error", "radius", "covered"], rows),
        "ellipsoid_summary.csv": _summary_csv(summarize(report)),
    }


def _info_gain_files(config, n_jobs):
    grid = config.domain.grid()
    curve = greedy_max_info_gain(
        config.kernel, config.reg, grid, int(config.horizon), mode=config.info_gain_mode
    )
    normalized = curve.values_for("normalized")
    literal = curve.values_for("paper-literal")
    dim = config.kernel.dim
    header = ["n", "gamma_normalized", "gamma_paper_literal"] + [f"x{i}" for i in range(dim)]
    rows = []
    for t, j in enumerate(curve.selected):
        rows.append((t + 1, normalized[t + 1], literal[t + 1], *grid[j]))
    return {"info_gain.csv": _csv(header, rows)}


_COMMANDS = {
    "run-bandit": _bandit_files,
    "run-coverage": _coverage_files,
    "run-ellipsoid": _ellipsoid_files,
    "info-gain": _info_gain_files,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="kblab",
        description="Kernelized bandit experiments: regret, coverage, and width diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run-bandit", "run a regret experiment"),
        ("run-coverage", "run a confidence-coverage experiment"),
        ("run-ellipsoid", "run a linear weight-set coverage experiment"),
        ("info-gain", "emit the greedy information-gain curve"),
        ("validate-config", "parse a config and print its canonical form"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a key = value config file")
        p.add_argument("--out", default=None, help="output directory (wins over KBL_OUT_DIR)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--replicates", type=int, default=None, help="override the config replicate count"
        )
        p.add_argument(
            "--parallel", type=int, default=1,
            help="worker processes for replicates (default 1, serial)",
        )
    sub.add_parser("version", help="print the tool version")
    return parser


def _resolve_out_dir(args, config):
    return args.out or os.environ.get("KBL_OUT_DIR") or config.out_dir or "."


def _apply_overrides(config, args):
    if args.seed is not None:
        config.seed = int(args.seed)
    if args.replicates is not None:
        config.replicates = int(args.replicates)
    config.validate()
    return config


def _manifest_text(config, shas, started, finished):
    lines = [
        f"tool = kblab {__version__}",
        f"config_hash = {config_hash(config)}",
        f"started_utc = {started}",
        f"finished_utc = {finished}",
    ]
    for name in shas:
        lines.append(f"output = {name}")
    for name, sha in shas.items():
        lines.append(f"sha256_{name} = {sha}")
    for line in canonical_text(config).splitlines():
        lines.append(f"config.{line}")
    return "\n".join(lines) + "\n"


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "version":
        print(f"kblab {__version__}")
        return 0
    try:
        config = _apply_overrides(load_config(args.config), args)
        if args.command == "validate-config":
            sys.stdout.write(canonical_text(config))
            return 0
        started = datetime.now(timezone.utc).isoformat()
        files = _COMMANDS[args.command](config, args.parallel)
        finished = datetime.now(timezone.utc).isoformat()
        out_dir = _resolve_out_dir(args, config)
        os.makedirs(out_dir, exist_ok=True)
        shas = {}
        for name, text in files.items():
            _atomic_write(os.path.join(out_dir, name), text)
            shas[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()
        _atomic_write(
            os.path.join(out_dir, "manifest.txt"),
            _manifest_text(config, shas, started, finished),
        )
        for name in list(files) + ["manifest.txt"]:
            print(f"wrote {os.path.join(out_dir, name)}", file=sys.stderr)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(main())

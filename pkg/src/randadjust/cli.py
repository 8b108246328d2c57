"""Command-line interface.

Subcommands:
  simulate      run a Monte Carlo grid from a JSON config and write metrics CSV
  analyze       one-shot treatment-effect report for a CSV dataset
  diagnose      leverage diagnostics and assumption audit for a CSV dataset
  oracle-check  run the sampling-moment and concentration self-checks

The environment variable RANDADJUST_SEED, when set, overrides the seed in
the simulate config.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

import numpy as np

from . import harness
from .design import center_and_reduce, trim_columns
from .dgp import read_numeric_csv
from .design import RawCovariates
from .errors import MissingColumn, NonBinaryTreatment, RandadjustError
from .srs_moments import run_oracle_suite

SEED_ENV_VAR = "RANDADJUST_SEED"

FULL_SCALE_PROFILE = {"n": 2000, "replicates": 5000, "outer_seeds": 50}


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = harness.load_config(args.config)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        cfg = dataclasses.replace(cfg, dgp=dataclasses.replace(cfg.dgp, seed=int(env_seed)))
    if args.full_scale:
        cfg = dataclasses.replace(
            cfg,
            dgp=dataclasses.replace(cfg.dgp, n=FULL_SCALE_PROFILE["n"]),
            replicates=FULL_SCALE_PROFILE["replicates"],
            outer_seeds=FULL_SCALE_PROFILE["outer_seeds"],
        )
    if args.workers is not None:
        cfg = dataclasses.replace(cfg, workers=args.workers)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows, _ = harness.run_experiment(cfg)
    out_path = out_dir / "metrics.csv"
    harness.emit_csv(rows, str(out_path))
    print(f"wrote {len(rows)} rows to {out_path}")
    return 0


def _load_observed(args: argparse.Namespace):
    header, data = read_numeric_csv(args.data)
    for col in (args.outcome, args.treat):
        if col not in header:
            raise MissingColumn(f"column {col!r} not in {args.data}")
    y = data[:, header.index(args.outcome)]
    t = data[:, header.index(args.treat)]
    if set(np.unique(t)) != {0.0, 1.0}:
        raise NonBinaryTreatment(f"treatment column {args.treat!r} must take values 0 and 1")
    cov_idx = [k for k, c in enumerate(header) if c not in (args.outcome, args.treat)]
    raw = RawCovariates(data[:, cov_idx], names=tuple(header[k] for k in cov_idx))
    if getattr(args, "trim", None):
        lo, hi = (float(v) for v in args.trim.split(","))
        raw = trim_columns(raw, lo, hi)
    return y, np.flatnonzero(t == 1.0), center_and_reduce(raw)


def _cmd_analyze(args: argparse.Namespace) -> int:
    y, treated, d = _load_observed(args)
    report = harness.analyze(y, treated, d, level=args.level)
    print(f"n={report.n}  n1={report.n1}  p={report.p}  kappa={report.kappa:.4f}")
    print(f"max within-arm leverage={report.max_arm_leverage:.4f}  "
          f"gram condition={report.gram_condition:.3g}")
    print(f"tau_unadj  = {report.tau_unadj: .6g}")
    print(f"tau_adj    = {report.tau_adj: .6g}")
    print(f"tau_adj_de = {report.tau_adj_de: .6g}")
    pct = 100.0 * report.level
    for est in ("adj", "adj_de"):
        tau = report.tau_adj if est == "adj" else report.tau_adj_de
        for var, s2 in report.variances.items():
            lo, hi = report.intervals[(est, var)]
            se = (s2 / report.n) ** 0.5
            print(f"{est:7s} {var}: se={se:.6g}  {pct:.0f}% CI [{lo:.6g}, {hi:.6g}]"
                  f"{'' if est != 'adj' else f'  (tau={tau:.6g})'}")
    return 0


def _cmd_diagnose(args: argparse.Namespace) -> int:
    header, data = read_numeric_csv(args.data)
    drop = {c for c in (args.outcome, args.treat) if c}
    cov_idx = [k for k, c in enumerate(header) if c not in drop]
    raw = RawCovariates(data[:, cov_idx], names=tuple(header[k] for k in cov_idx))
    d = center_and_reduce(raw)
    lev = d.leverages
    print(f"n={d.n}  p={d.p}  kappa={d.kappa:.6g}")
    print(f"leverage sum={lev.sum():.6g} (target {d.p})")
    print(f"kappa bounds: p/n={d.p / d.n:.6g} <= kappa <= 1: "
          f"{'ok' if d.p / d.n - 1e-12 <= d.kappa <= 1 + 1e-12 else 'VIOLATED'}")
    counts, edges = np.histogram(lev, bins=args.bins, range=(0.0, max(d.kappa, 1e-12)))
    lines = ["bin_left,bin_right,count"]
    for k in range(counts.size):
        lines.append(f"{edges[k]:.6g},{edges[k + 1]:.6g},{counts[k]}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote leverage histogram to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_oracle_check(args: argparse.Namespace) -> int:
    checks = run_oracle_suite(seed=args.seed, fast=args.fast)
    lines = ["check,passed,detail"]
    for c in checks:
        lines.append(f"{c.name},{'pass' if c.passed else 'FAIL'},{c.detail}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0 if all(c.passed for c in checks) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randadjust", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a Monte Carlo grid from a config file")
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", required=True, help="output directory for metrics.csv")
    p.add_argument("--workers", type=int, default=None, help="override worker count")
    p.add_argument("--full-scale", action="store_true",
                   help="swap in the full-scale profile (n=2000, 5000 replicates, 50 seeds)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="one-shot estimate report for a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--treat", required=True)
    p.add_argument("--trim", default=None, metavar="L,U",
                   help="clip covariate columns at these quantiles, e.g. 0.025,0.975")
    p.add_argument("--level", type=float, default=0.95)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("diagnose", help="leverage diagnostics for a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--outcome", default=None, help="outcome column to exclude, if present")
    p.add_argument("--treat", default=None, help="treatment column to exclude, if present")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--out", default=None, help="write the histogram CSV here instead of stdout")
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("oracle-check", help="run the sampling-moment self-check suite")
    p.add_argument("--fast", action="store_true", help="reduced trial counts")
    p.add_argument("--seed", type=int, default=20260808)
    p.add_argument("--out", default=None, help="also write the pass/fail table here")
    p.set_defaults(func=_cmd_oracle_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RandadjustError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

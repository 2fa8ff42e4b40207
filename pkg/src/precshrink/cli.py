"""Command-line entry point: simulate, estimate, limits.

Exit codes: 0 success, 2 usage/config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import configio
from .asymptotics import compute_limit_functionals
from .errors import ConfigError, NumericError, RegimeError, SingularMatrixError
from .estimators import TargetMatrix, bona_fide_olse, estimate_isotropic_precision
from .linalg import REGIME_INVERTIBLE, DataMatrix, rank_tolerance, sample_covariance
from .simulation import ExperimentConfig, builtin_experiments, run_experiment, with_overrides
from .spectral import build_covariance

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _parse_p_grid(text: str) -> tuple[int, ...]:
    try:
        grid = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"invalid --p-grid {text!r}: {exc}") from exc
    if not grid:
        raise ConfigError(f"invalid --p-grid {text!r}: empty")
    return grid


def _resolve_config(args) -> ExperimentConfig:
    builtins = builtin_experiments()
    if args.config in builtins:
        config = builtins[args.config]
        return with_overrides(
            config,
            replications=args.reps,
            seed=args.seed,
            p_grid=_parse_p_grid(args.p_grid) if args.p_grid else None,
        )
    config = configio.load_experiment_config(args.config, seed_override=args.seed)
    return with_overrides(
        config,
        replications=args.reps,
        p_grid=_parse_p_grid(args.p_grid) if args.p_grid else None,
    )


def cmd_simulate(args) -> int:
    config = _resolve_config(args)
    reports = run_experiment(config, threads=args.threads)
    rows = configio.rows_from_reports(config, reports)
    out = args.out or f"{config.name}_results.csv"
    configio.write_results(out, rows)
    print(f"experiment {config.name}: ratio={config.ratio:g}, "
          f"reps={config.replications}, seed={config.seed}")
    for report in reports:
        print(f"p={report.p} n={report.n} baseline={report.baseline_id}")
        for entry in report.summaries:
            if entry.status != "ok":
                print(f"  {entry.estimator_id}: skipped ({entry.reason})")
            else:
                print(f"  {entry.estimator_id}: PRIAL={entry.prial_percent:.2f}% "
                      f"mean_loss={entry.mean_loss:.6g}")
    print(f"results written to {out}")
    return EXIT_OK


def _resolve_precision_target(text: str, p: int) -> TargetMatrix:
    if text == "identity_over_p":
        return TargetMatrix.identity_over_p(p)
    if text.startswith("inverse-of:"):
        spec = configio.load_spectrum(text[len("inverse-of:"):])
        return TargetMatrix.inverse_of_spectrum(spec, p, name=text)
    spec = configio.load_spectrum(text)
    return TargetMatrix.from_spectrum(spec, p, name=text)


def cmd_estimate(args) -> int:
    matrix = configio.load_matrix(args.data)
    if args.rows == "observations":
        matrix = matrix.T
    data = DataMatrix(matrix)
    stats = sample_covariance(data, center=args.center)
    if not args.pseudo_inverse:
        tol = rank_tolerance(stats.eigenvalues, stats.p)
        rank = int(np.sum(stats.eigenvalues > tol))
        if rank < min(stats.p, stats.n):
            raise SingularMatrixError(
                f"sample covariance is numerically singular: data rank {rank} < "
                f"min(p, n) = {min(stats.p, stats.n)}; no shrinkage path applies"
            )
    out = args.out or f"{os.path.splitext(args.data)[0]}.precision.csv"
    print(f"p={stats.p} n={stats.n} ratio={stats.ratio:.6g} regime={stats.regime}")
    if stats.regime == REGIME_INVERTIBLE:
        target = _resolve_precision_target(args.target, stats.p)
        estimate = bona_fide_olse(stats, target, clamp=args.clamp)
        np.savetxt(out, estimate.matrix, delimiter=",", fmt="%.17g")
        print(f"target={target.name or 'custom'} "
              f"alpha={estimate.weights.alpha:.10g} beta={estimate.weights.beta:.10g}")
        print(f"precision estimate written to {out}")
        return EXIT_OK
    if args.identity_case:
        scale = estimate_isotropic_precision(stats)
        np.savetxt(out, scale * np.eye(stats.p), delimiter=",", fmt="%.17g")
        print(f"isotropic precision scale estimate: {scale:.10g}")
        print(f"precision estimate written to {out}")
        return EXIT_OK
    if args.pseudo_inverse:
        np.savetxt(out, stats.inverse, delimiter=",", fmt="%.17g")
        print("raw pseudo-inverse written (no shrinkage applies for p >= n)")
        print(f"precision estimate written to {out}")
        return EXIT_OK
    raise RegimeError(
        "p >= n: no feasible shrinkage estimator exists for a general covariance; "
        "pass --identity-case (isotropic population) or --pseudo-inverse (raw)"
    )


def cmd_limits(args) -> int:
    spec = configio.load_spectrum(args.spectrum)
    truth = build_covariance(spec, args.p)
    target = None
    if args.target:
        if args.target == "true_precision":
            target = TargetMatrix.from_matrix(truth.precision, name="true_precision")
        else:
            target = _resolve_precision_target(args.target, args.p)
    limits = compute_limit_functionals(truth, args.ratio, spec=spec, target=target)
    print(f"ratio={limits.ratio:.17g} (evaluated at p={args.p})")
    if limits.inverse_frobenius is not None:
        print(f"inverse_frobenius_limit={limits.inverse_frobenius:.17g}")
    if limits.dual_trace is not None:
        print(f"dual_trace_limit={limits.dual_trace:.17g} "
              f"(residual={limits.residuals['dual_trace']:.3e}, "
              f"iterations={limits.iterations['dual_trace']})")
        print(f"dual_frobenius_limit={limits.dual_frobenius:.17g}")
        print(f"pinv_trace_limit={limits.dual_trace / limits.ratio:.17g}")
        print(f"pinv_frobenius_limit={limits.dual_frobenius / limits.ratio:.17g}")
    if limits.target_dual_trace is not None:
        print(f"target_dual_trace_limit={limits.target_dual_trace:.17g} "
              f"(residual={limits.residuals['target_dual_trace']:.3e}, "
              f"iterations={limits.iterations['target_dual_trace']})")
    if limits.alpha is not None:
        print(f"alpha={limits.alpha:.17g}")
        print(f"beta={limits.beta:.17g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="precshrink",
        description="Linear shrinkage estimation of large-dimensional precision matrices",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment and write a CSV")
    sim.add_argument("config", help="builtin experiment name or config file path")
    sim.add_argument("--reps", type=int, default=None, help="override replication count")
    sim.add_argument("--seed", type=int, default=None, help="override the random seed")
    sim.add_argument("--p-grid", default=None, help="comma-separated dimensions, e.g. 20,40,60")
    sim.add_argument("--threads", type=int, default=1, help="worker threads for replications")
    sim.add_argument("--out", default=None, help="output CSV path")
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="estimate a precision matrix from a data file")
    est.add_argument("data", help="CSV matrix file")
    est.add_argument(
        "--rows",
        choices=("variables", "observations"),
        default="variables",
        help="what the file rows represent (default: variables)",
    )
    est.add_argument("--target", default="identity_over_p",
                     help="'identity_over_p', spectrum name/file, or inverse-of:<spectrum>")
    est.add_argument("--center", action="store_true", help="subtract variable means")
    est.add_argument("--clamp", action="store_true",
                     help="project the shrinkage weight onto its support")
    est.add_argument("--identity-case", action="store_true",
                     help="p >= n: assume an isotropic population covariance")
    est.add_argument("--pseudo-inverse", action="store_true",
                     help="p >= n: emit the raw pseudo-inverse")
    est.add_argument("--out", default=None, help="output CSV path")
    est.set_defaults(func=cmd_estimate)

    lim = sub.add_parser("limits", help="print deterministic equivalents for a spectrum")
    lim.add_argument("--spectrum", required=True, help="builtin spectrum name or file")
    lim.add_argument("--ratio", "--c", dest="ratio", type=float, required=True,
                     help="concentration ratio p/n (must differ from 1)")
    lim.add_argument("--target", default=None,
                     help="optional target for limiting shrinkage weights")
    lim.add_argument("--p", type=int, default=100,
                     help="dimension at which finite-p quantities are realized")
    lim.set_defaults(func=cmd_limits)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:  # ConfigError and RegimeError included
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()

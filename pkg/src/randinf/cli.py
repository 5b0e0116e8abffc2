"""Command-line interface.

Subcommands: ``ci`` builds a confidence set from a CSV file, ``simulate``
runs a coverage study on a synthetic population, ``check`` cross-checks
the closed-form algorithms against each other and a grid scan.

Exit codes: 0 success, 1 check disagreement, 2 input error, 3 degenerate
statistic.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .csbuild import build_cs_baseline, build_cs_fast, build_cs_grid, confidence_set
from .data import diagnose, load_csv
from .draws import draw_assignments, enumerate_assignments
from .errors import DegenerateVariance, InputError, RandinfError, TooManyAssignments
from .estimators import adjusted_wald, wald
from .simulate import ALL_METHODS, make_population, run_coverage


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="CSV file with a header row")
    p.add_argument("--y", default="Y", help="outcome column name")
    p.add_argument("--d", default="D", help="take-up column name (0/1)")
    p.add_argument("--z", default="Z", help="assignment column name (0/1)")
    p.add_argument(
        "--x",
        action="append",
        default=[],
        metavar="COL",
        help="covariate column name (repeatable)",
    )


def _add_test_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.05, help="miscoverage level")
    p.add_argument("--m", type=int, default=1000, help="number of reference draws")
    p.add_argument("--seed", type=int, default=0, help="seed for the draw sampler")
    p.add_argument(
        "--adjusted", action="store_true", help="use covariate-adjusted statistics"
    )
    p.add_argument(
        "--include-observed",
        action="store_true",
        help="append the observed assignment to the draw set",
    )
    p.add_argument(
        "--exhaustive",
        action="store_true",
        help="enumerate all assignments instead of sampling (ignores --m/--seed)",
    )


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randinf",
        description=(
            "Randomization confidence sets for the complier average "
            "treatment effect in experiments with noncompliance"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ci = sub.add_parser("ci", help="confidence set from a CSV file")
    _add_data_args(ci)
    _add_test_args(ci)
    ci.add_argument(
        "--algorithm",
        choices=("fast", "baseline", "grid"),
        default="fast",
    )
    ci.add_argument("--grid-lo", type=float, default=None)
    ci.add_argument("--grid-hi", type=float, default=None)
    ci.add_argument("--grid-step", type=float, default=None)
    ci.add_argument("--format", choices=("json", "text"), default="json")

    chk = sub.add_parser(
        "check", help="compare fast, baseline, and grid answers on one dataset"
    )
    _add_data_args(chk)
    _add_test_args(chk)
    chk.add_argument("--grid-points", type=int, default=512)
    chk.add_argument(
        "--tolerance", type=float, default=1e-8, help="endpoint agreement tolerance"
    )
    chk.add_argument("--format", choices=("json", "text"), default="json")

    sim = sub.add_parser("simulate", help="coverage study on a synthetic population")
    sim.add_argument("--n", type=int, default=100)
    sim.add_argument("--n1", type=int, default=50)
    sim.add_argument("--compliers", type=int, default=50)
    sim.add_argument("--k", type=int, default=3)
    sim.add_argument("--noise-sd", type=float, default=0.1)
    sim.add_argument("--n-sims", type=int, default=500)
    sim.add_argument("--m", type=int, default=500)
    sim.add_argument("--alpha", type=float, default=0.05)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument(
        "--methods",
        default=",".join(ALL_METHODS),
        help="comma-separated subset of " + ",".join(ALL_METHODS),
    )
    sim.add_argument("--algorithm", choices=("fast", "baseline"), default="fast")
    sim.add_argument("--workers", type=int, default=None)
    sim.add_argument("--format", choices=("json", "text"), default="json")
    return parser


def _load(args):
    return load_csv(
        args.input, y_col=args.y, d_col=args.d, z_col=args.z, x_cols=args.x
    )


def _make_draws(args, data):
    if args.exhaustive:
        draws = enumerate_assignments(data.n, data.n1)
    else:
        if args.m < 1:
            raise InputError(f"--m must be >= 1, got {args.m}")
        draws = draw_assignments(data.n, data.n1, args.m, args.seed)
    if args.include_observed:
        draws = draws.with_observed(data.z)
    return draws


def _grid_betas(args, data) -> np.ndarray:
    if args.grid_lo is None or args.grid_hi is None or args.grid_step is None:
        raise InputError(
            "--algorithm grid needs --grid-lo, --grid-hi, and --grid-step"
        )
    if args.grid_step <= 0 or args.grid_hi < args.grid_lo:
        raise InputError("grid bounds must satisfy lo <= hi and step > 0")
    return np.arange(args.grid_lo, args.grid_hi + 0.5 * args.grid_step, args.grid_step)


def _emit(payload: dict, text: str, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _point_estimates(data) -> dict:
    """Both ratio estimators when they exist; the auxiliary one may fail
    on data the requested statistic never touches (e.g. collinear
    covariates on an unadjusted run), which reports as null."""
    out = {}
    for name, fn in (("wald", wald), ("adjusted_wald", adjusted_wald)):
        try:
            est = fn(data)
        except RandinfError:
            out[name] = None
            continue
        out[name] = est.value if est.defined else None
    return out


def cmd_ci(args) -> int:
    data = _load(args)
    draws = _make_draws(args, data)
    grid_betas = _grid_betas(args, data) if args.algorithm == "grid" else None
    result = confidence_set(
        data,
        draws,
        args.alpha,
        adjusted=args.adjusted,
        algorithm=args.algorithm,
        grid_betas=grid_betas,
    )
    points = _point_estimates(data)
    seed = None if args.exhaustive else args.seed
    payload = result.to_jsonable()
    payload["seed"] = seed
    payload["point_estimates"] = points
    payload["diagnostics"] = diagnose(data).to_dict()

    def _fmt(v):
        return "undefined" if v is None else f"{v:.6g}"

    text = "\n".join(
        [
            result.to_text(),
            f"adjusted wald: {_fmt(points['adjusted_wald'])}",
            f"seed: {'none (exhaustive)' if seed is None else seed}",
        ]
    )
    _emit(payload, text, args.format)
    return 0


def cmd_check(args) -> int:
    data = _load(args)
    draws = _make_draws(args, data)
    base = build_cs_baseline(data, draws, args.alpha, adjusted=args.adjusted)
    fast = build_cs_fast(data, draws, args.alpha, adjusted=args.adjusted)
    tol = args.tolerance

    def _dev(a: float, b: float) -> float:
        if a == b:
            return 0.0
        if not (np.isfinite(a) and np.isfinite(b)):
            return float("inf")
        return abs(a - b)

    max_dev = 0.0
    agree_algos = base.intervals.count == fast.intervals.count
    if agree_algos:
        for (alo, ahi), (blo, bhi) in zip(
            base.intervals.intervals, fast.intervals.intervals
        ):
            max_dev = max(max_dev, _dev(alo, blo), _dev(ahi, bhi))
            slack_lo = tol * (1.0 + min(abs(alo), abs(blo)))
            slack_hi = tol * (1.0 + min(abs(ahi), abs(bhi)))
            same_lo = alo == blo or abs(alo - blo) <= slack_lo
            same_hi = ahi == bhi or abs(ahi - bhi) <= slack_hi
            if not (same_lo and same_hi):
                agree_algos = False
                break
    else:
        max_dev = float("inf")

    betas = _check_grid(data, base, args.grid_points)
    exclusion = 1e-6
    near_edge = np.zeros(betas.size, dtype=bool)
    for lo, hi in base.intervals.intervals:
        for edge in (lo, hi):
            if np.isfinite(edge):
                near_edge |= np.abs(betas - edge) <= exclusion
    grid = build_cs_grid(data, draws, args.alpha, adjusted=args.adjusted, betas=betas)
    closed_member = np.array(
        [base.intervals.contains(float(b)) for b in betas], dtype=bool
    )
    # Points where the observed statistic ties the critical value to within
    # the dual-path agreement tolerance are inconclusive: the two paths
    # compute the same quantity by different arithmetic, so the side of an
    # exact tie is float noise (this happens whenever the observed
    # assignment is itself among the draws).
    near_tie = np.abs(grid.observed_sq - grid.quantiles) <= 1e-9 * (
        1.0 + np.abs(grid.quantiles)
    )
    mismatches = int(np.sum((grid.member != closed_member) & ~near_edge & ~near_tie))
    agree_grid = mismatches == 0

    ok = agree_algos and agree_grid
    payload = {
        "agree": ok,
        "algorithms_agree": agree_algos,
        "max_endpoint_diff": "inf" if np.isinf(max_dev) else max_dev,
        "grid_agrees": agree_grid,
        "grid_mismatches": mismatches,
        "grid_points": int(betas.size),
        "baseline": base.to_jsonable(),
        "fast": fast.to_jsonable(),
    }
    text = (
        f"baseline vs fast: {'agree' if agree_algos else 'DISAGREE'}"
        f" (max endpoint diff {max_dev:.3g})\n"
        f"grid scan ({betas.size} points): "
        f"{'agree' if agree_grid else f'{mismatches} mismatches'}"
    )
    _emit(payload, text, args.format)
    return 0 if ok else 1


def _check_grid(data, base, points: int) -> np.ndarray:
    finite = [v for iv in base.intervals.intervals for v in iv if np.isfinite(v)]
    est = wald(data)
    if finite:
        lo, hi = min(finite), max(finite)
        span = max(hi - lo, 1.0)
        lo, hi = lo - 0.5 * span, hi + 0.5 * span
    elif est.defined:
        lo, hi = est.value - 10.0, est.value + 10.0
    else:
        lo, hi = -10.0, 10.0
    return np.linspace(lo, hi, points)


def cmd_simulate(args) -> int:
    methods = tuple(s for s in args.methods.split(",") if s)
    for mth in methods:
        if mth not in ALL_METHODS:
            raise InputError(f"unknown method {mth!r}, have {ALL_METHODS}")
    pop = make_population(
        n=args.n,
        complier_count=args.compliers,
        seed=args.seed,
        noise_sd=args.noise_sd,
        k=args.k,
    )
    report = run_coverage(
        pop,
        n1=args.n1,
        n_sims=args.n_sims,
        m=args.m,
        alpha=args.alpha,
        methods=methods,
        seed=args.seed,
        algorithm=args.algorithm,
        workers=args.workers,
    )
    _emit(report.to_jsonable(), report.to_text(), args.format)
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "ci":
            return cmd_ci(args)
        if args.command == "check":
            return cmd_check(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        raise InputError(f"unknown command {args.command!r}")
    except DegenerateVariance as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InputError, TooManyAssignments, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RandinfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

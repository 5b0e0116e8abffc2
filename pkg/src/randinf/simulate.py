"""Finite-population simulation harness for coverage studies.

Populations hold fixed potential outcomes for three take-up strata
(never-takers, compliers, always-takers); each simulated experiment
redraws only the assignment.  Effects are recentered within every
stratum so the complier average effect is exactly zero unless a constant
effect is requested.
"""

from __future__ import annotations

import multiprocessing
import os
import time
from dataclasses import dataclass

import numpy as np

from .arfunc import direct_delta, draw_functions, functions_to_arrays
from .csbuild import INDEX_SET_RTOL, confidence_set, quantile_index
from .data import ExperimentData
from .draws import draw_assignments, enumerate_assignments
from .errors import InvalidStrataSplit, RandinfError
from .estimators import tsls_interval

NEVER, COMPLIER, ALWAYS = 0, 1, 2

RAND_METHODS = ("rand_unadjusted", "rand_adjusted")
ALL_METHODS = ("tsls", *RAND_METHODS)


@dataclass(frozen=True)
class PopulationSpec:
    """Fixed potential outcomes and stratum labels for n units."""

    strata: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    x: np.ndarray
    late: float

    @property
    def n(self) -> int:
        return self.strata.shape[0]

    @property
    def k(self) -> int:
        return self.x.shape[1]

    def takeup(self, z: np.ndarray) -> np.ndarray:
        """Realized take-up: always-takers always, compliers if assigned."""
        return np.where(
            self.strata == ALWAYS,
            1.0,
            np.where((self.strata == COMPLIER) & (z == 1.0), 1.0, 0.0),
        )


def _rng(seed, spawn_key=()) -> np.random.Generator:
    seq = np.random.SeedSequence(seed, spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(seq))


def make_population(
    n: int,
    complier_count: int,
    seed: int,
    tau: tuple[float, float, float] = (-2.0, -1.0, 0.0),
    noise_sd: float = 0.1,
    k: int = 3,
) -> PopulationSpec:
    """Three-strata population with recentered heterogeneous effects.

    ``tau`` gives base outcome levels for (always, complier, never).
    The non-complier remainder splits evenly, odd unit to always-takers.
    Within every stratum the treatment effects are shifted to average
    exactly zero, so the complier average effect is zero by construction.
    """
    if not 1 <= complier_count <= n:
        raise InvalidStrataSplit(
            f"complier_count must be in [1, n], got {complier_count} with n={n}"
        )
    rest = n - complier_count
    n_always = rest - rest // 2
    n_never = rest // 2
    strata = np.concatenate(
        [
            np.full(complier_count, COMPLIER, dtype=np.int8),
            np.full(n_always, ALWAYS, dtype=np.int8),
            np.full(n_never, NEVER, dtype=np.int8),
        ]
    )
    tau_always, tau_complier, tau_never = tau
    base = np.where(
        strata == ALWAYS,
        tau_always,
        np.where(strata == COMPLIER, tau_complier, tau_never),
    )
    rng = _rng(seed)
    y0 = base + noise_sd * rng.standard_normal(n)
    y1 = y0 + noise_sd * rng.standard_normal(n)
    for g in (NEVER, COMPLIER, ALWAYS):
        mask = strata == g
        if mask.any():
            y1[mask] -= (y1[mask] - y0[mask]).mean()
    x = rng.standard_normal((n, k))
    return PopulationSpec(strata=strata, y0=y0, y1=y1, x=x, late=0.0)


def constant_effect_population(
    n: int, beta0: float, seed: int, noise_sd: float = 1.0, k: int = 0
) -> PopulationSpec:
    """All units comply and gain exactly ``beta0``."""
    rng = _rng(seed)
    y0 = noise_sd * rng.standard_normal(n)
    x = rng.standard_normal((n, k))
    return PopulationSpec(
        strata=np.full(n, COMPLIER, dtype=np.int8),
        y0=y0,
        y1=y0 + beta0,
        x=x,
        late=float(beta0),
    )


def realize_experiment(pop: PopulationSpec, z: np.ndarray) -> ExperimentData:
    z = np.asarray(z, dtype=np.float64)
    d = pop.takeup(z)
    y = np.where(d == 1.0, pop.y1, pop.y0)
    return ExperimentData.from_arrays(y, d, z, pop.x, demean=True)


def _assignment(n: int, n1: int, rng: np.random.Generator) -> np.ndarray:
    z = np.zeros(n, dtype=np.float64)
    z[rng.permutation(n)[:n1]] = 1.0
    return z


def _draw_seed(seed: int, sim: int) -> int:
    seq = np.random.SeedSequence(seed, spawn_key=(sim, 1))
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class MethodSummary:
    method: str
    n_sims: int
    n_covered: int
    n_errors: int
    n_unbounded: int
    mean_finite_length: float
    mean_time: float

    @property
    def coverage(self) -> float:
        return self.n_covered / self.n_sims

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "n_sims": self.n_sims,
            "coverage": self.coverage,
            "n_covered": self.n_covered,
            "n_errors": self.n_errors,
            "n_unbounded": self.n_unbounded,
            "mean_finite_length": self.mean_finite_length,
            "mean_time": self.mean_time,
        }


@dataclass(frozen=True)
class CoverageReport:
    config: dict
    methods: dict[str, MethodSummary]

    def to_jsonable(self) -> dict:
        return {
            "config": self.config,
            "methods": {k: v.to_dict() for k, v in self.methods.items()},
        }

    def to_text(self) -> str:
        lines = [
            "coverage study: "
            + ", ".join(f"{k}={v}" for k, v in self.config.items())
        ]
        header = (
            f"{'method':<18}{'coverage':>9}{'errors':>8}{'unbounded':>10}"
            f"{'len(finite)':>12}{'sec/sim':>9}"
        )
        lines.append(header)
        for name, s in self.methods.items():
            lines.append(
                f"{name:<18}{s.coverage:>9.3f}{s.n_errors:>8}{s.n_unbounded:>10}"
                f"{s.mean_finite_length:>12.3f}{s.mean_time:>9.3f}"
            )
        return "\n".join(lines)


def _one_sim(args) -> dict:
    (pop, n1, m, alpha, methods, seed, sim, algorithm) = args
    rng = _rng(seed, spawn_key=(sim, 0))
    z = _assignment(pop.n, n1, rng)
    data = realize_experiment(pop, z)
    out: dict[str, dict] = {}
    draws = None
    for method in methods:
        t0 = time.perf_counter()
        rec = {"covered": False, "error": False, "unbounded": False, "length": 0.0}
        try:
            if method == "tsls":
                iv = tsls_interval(data, level=1.0 - alpha, adjusted=False)
                rec["covered"] = bool(iv.covers(pop.late))
                rec["length"] = 2.0 * iv.halfwidth
            else:
                if draws is None:
                    draws = draw_assignments(pop.n, n1, m, _draw_seed(seed, sim))
                res = confidence_set(
                    data,
                    draws,
                    alpha,
                    adjusted=(method == "rand_adjusted"),
                    algorithm=algorithm,
                )
                rec["covered"] = bool(res.intervals.contains(pop.late))
                rec["unbounded"] = not res.intervals.is_bounded()
                rec["length"] = res.intervals.finite_length()
        except (RandinfError, np.linalg.LinAlgError):
            rec["error"] = True
        rec["time"] = time.perf_counter() - t0
        out[method] = rec
    return out


def worker_count(requested: int | None = None) -> int:
    """Worker processes to use, honoring the RANDINF_THREADS cap."""
    cap = os.environ.get("RANDINF_THREADS")
    avail = os.cpu_count() or 1
    count = requested if requested else avail
    if cap:
        count = min(count, max(1, int(cap)))
    return max(1, min(count, avail))


def run_coverage(
    pop: PopulationSpec,
    n1: int,
    n_sims: int = 500,
    m: int = 500,
    alpha: float = 0.05,
    methods: tuple[str, ...] = ALL_METHODS,
    seed: int = 0,
    algorithm: str = "fast",
    workers: int | None = None,
) -> CoverageReport:
    """Monte Carlo coverage of each method at the population's true effect.

    Simulations are independent of worker count: every simulation derives
    its assignment and draw seeds from (seed, sim index) alone.  A
    simulation that raises is tallied as an error and counted as not
    covering.
    """
    for method in methods:
        if method not in ALL_METHODS:
            raise ValueError(f"unknown method {method!r}, have {ALL_METHODS}")
    if n_sims < 1:
        raise ValueError(f"n_sims must be >= 1, got {n_sims}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not 0 < n1 < pop.n:
        raise ValueError(f"n1 must be strictly between 0 and n={pop.n}, got {n1}")
    tasks = [
        (pop, n1, m, alpha, tuple(methods), seed, sim, algorithm)
        for sim in range(n_sims)
    ]
    nworkers = worker_count(workers)
    if nworkers > 1 and n_sims > 1:
        with multiprocessing.Pool(nworkers) as pool:
            results = pool.map(_one_sim, tasks, chunksize=max(1, n_sims // (4 * nworkers)))
    else:
        results = [_one_sim(t) for t in tasks]
    summaries = {}
    for method in methods:
        recs = [r[method] for r in results]
        ok = [r for r in recs if not r["error"]]
        summaries[method] = MethodSummary(
            method=method,
            n_sims=n_sims,
            n_covered=sum(r["covered"] for r in recs),
            n_errors=sum(r["error"] for r in recs),
            n_unbounded=sum(r["unbounded"] for r in recs),
            mean_finite_length=(
                float(np.mean([r["length"] for r in ok])) if ok else float("nan")
            ),
            mean_time=float(np.mean([r["time"] for r in recs])),
        )
    config = {
        "n": pop.n,
        "n1": n1,
        "k": pop.k,
        "n_sims": n_sims,
        "m": m,
        "alpha": alpha,
        "seed": seed,
        "algorithm": algorithm,
        "late": pop.late,
    }
    return CoverageReport(config=config, methods=summaries)


def exact_noncoverage(
    pop: PopulationSpec, n1: int, alpha: float, adjusted: bool = False
) -> dict:
    """Exhaustive non-coverage rate of the randomization test at the true
    effect, over every possible assignment of a small design.

    For each assignment taken as the truth, the experiment is realized,
    the reference distribution is built from all assignments, and the
    observed statistic at the true effect is compared with the critical
    value.  Under a constant effect the rejection rate cannot exceed
    alpha.

    Observed values within the index-set tolerance of the critical value
    count as attaining it, hence as not rejected; assignment pairs with
    exactly tied statistics otherwise flip sides through float noise.
    """
    draws = enumerate_assignments(pop.n, n1)
    beta0 = pop.late
    total = draws.m
    need = quantile_index(total, alpha)
    rejected = 0
    for row in range(total):
        z = draws.draws[row].astype(np.float64)
        data = realize_experiment(pop, z)
        fns = draw_functions(data, draws, adjusted=adjusted)
        num, den = functions_to_arrays(fns)
        vals = ((num[:, 0] * beta0 + num[:, 1]) * beta0 + num[:, 2]) / (
            (den[:, 0] * beta0 + den[:, 1]) * beta0 + den[:, 2]
        )
        q = float(np.partition(vals, need - 1)[need - 1])
        obs_sq = direct_delta(data, z, beta0, adjusted) ** 2
        if obs_sq > q + INDEX_SET_RTOL * max(1.0, abs(q)):
            rejected += 1
    return {
        "num_assignments": total,
        "num_rejected": rejected,
        "noncoverage": rejected / total,
        "alpha": alpha,
    }

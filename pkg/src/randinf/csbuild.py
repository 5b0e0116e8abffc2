"""Confidence sets by exact inversion of randomization tests.

A value beta belongs to the confidence set when the observed squared
statistic does not exceed the Monte Carlo critical value built from the
reference draws at that same beta.  Because every squared statistic is a
rational quadratic with positive denominator, the critical curve is a
piecewise selection among the draw curves, with switch points only where
two distinct draw curves intersect.  Both inversion algorithms exploit
this: the baseline visits every segment cut by every pairwise
intersection, the fast variant walks the critical curve and skips
intersections that do not involve the currently selected draw.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import kernels
from .arfunc import (
    RationalQuadratic,
    draw_functions,
    direct_delta,
    evaluate_delta_sq,
    functions_to_arrays,
    observed_function,
)
from .data import ExperimentData
from .draws import DrawSet
from .errors import InputError
from .estimators import adjusted_wald, wald
from .polyalg import (
    INF,
    IntervalUnion,
    Poly4,
    merge_tol,
    nonpositivity_region,
)
from ._kernel_py import cross_coeffs

# Relative tolerance (on the squared scale) for membership in the set of
# draws attaining the critical value.
INDEX_SET_RTOL = 1e-12
# Slack protecting the (1 - alpha) count against float rounding.
COUNT_FUZZ = 1e-9
# Pair chunk size for the intersection sweep.
PAIR_CHUNK = 2_000_000
# Segment chunk size for baseline midpoint evaluation.
SEGMENT_CHUNK = 4096
# Gap rule for collapsing nearby intersection points: abs + rel parts.
MERGE_ABS = 1e-9
MERGE_REL = 1e-9


def quantile_index(m: int, alpha: float) -> int:
    """1-based order statistic defining the critical value."""
    need = int(np.ceil(m * (1.0 - alpha) - COUNT_FUZZ))
    return min(max(need, 1), m)


def quantile_value(values: np.ndarray, alpha: float) -> float:
    """Smallest listed value whose empirical CDF reaches 1 - alpha."""
    values = np.asarray(values, dtype=np.float64)
    need = quantile_index(values.size, alpha)
    return float(np.partition(values, need - 1)[need - 1])


def index_set_values(values: np.ndarray, alpha: float) -> np.ndarray:
    """Indices of draws attaining the critical value, judged with a
    relative tolerance on the squared scale."""
    values = np.asarray(values, dtype=np.float64)
    q = quantile_value(values, alpha)
    tol = INDEX_SET_RTOL * max(1.0, abs(q))
    return np.flatnonzero(np.abs(values - q) <= tol)


def index_set(
    beta: float, functions: list[RationalQuadratic], alpha: float
) -> np.ndarray:
    """Indices of draw curves attaining the critical value at beta.

    Always nonempty: the order statistic defining the critical value is
    itself one of the listed values.
    """
    values = np.concatenate([evaluate_delta_sq(f, [beta]) for f in functions])
    return index_set_values(values, alpha)


@dataclass(frozen=True)
class QuantileEnvelope:
    """The critical-value curve of a draw set at one alpha.

    ``intersections`` holds every pairwise crossing point of distinct
    draw curves, sorted and deduplicated; between consecutive entries the
    draw attaining the critical value cannot change.
    """

    functions: list[RationalQuadratic]
    alpha: float
    intersections: np.ndarray
    num_pairs: int
    num_identical_pairs: int
    _num: np.ndarray = field(repr=False)
    _den: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.functions)

    def values_at(self, betas) -> np.ndarray:
        """Squared draw statistics; shape (len(betas), m)."""
        b = np.atleast_1d(np.asarray(betas, dtype=np.float64))[:, None]
        num = (self._num[:, 0] * b + self._num[:, 1]) * b + self._num[:, 2]
        den = (self._den[:, 0] * b + self._den[:, 1]) * b + self._den[:, 2]
        return num / den

    def quantile_at(self, beta: float) -> float:
        return quantile_value(self.values_at(beta)[0], self.alpha)

    def index_set_at(self, beta: float) -> np.ndarray:
        return index_set_values(self.values_at(beta)[0], self.alpha)

    def realizing_index_at(self, beta: float) -> int:
        return int(self.index_set_at(beta)[0])


def _pair_chunks(m: int, chunk: int):
    """Yield (ia, ib) blocks covering all i < j pairs without holding the
    full pair list in memory."""
    ia_parts, ib_parts, size = [], [], 0
    for i in range(m - 1):
        cnt = m - 1 - i
        ia_parts.append(np.full(cnt, i, dtype=np.int64))
        ib_parts.append(np.arange(i + 1, m, dtype=np.int64))
        size += cnt
        if size >= chunk:
            yield np.concatenate(ia_parts), np.concatenate(ib_parts)
            ia_parts, ib_parts, size = [], [], 0
    if size:
        yield np.concatenate(ia_parts), np.concatenate(ib_parts)


def _cluster_sorted(values: np.ndarray) -> np.ndarray:
    """Collapse sorted values whose gaps are inside the merge tolerance."""
    if values.size == 0:
        return values
    keep = np.empty(values.size, dtype=bool)
    keep[0] = True
    keep[1:] = np.diff(values) > MERGE_ABS + MERGE_REL * np.abs(values[1:])
    cluster = np.cumsum(keep) - 1
    count = np.bincount(cluster)
    return np.bincount(cluster, weights=values) / count


def _check_compatible(data: ExperimentData, draws: DrawSet) -> None:
    if draws.n != data.n:
        raise InputError(
            f"draw set is over n={draws.n} units but data has n={data.n}"
        )
    if draws.n1 != data.n1:
        raise InputError(
            f"draw set uses n1={draws.n1} but the observed design has n1={data.n1}"
        )


def envelope_from_functions(
    functions: list[RationalQuadratic],
    alpha: float,
    pair_chunk: int = PAIR_CHUNK,
) -> QuantileEnvelope:
    """Sweep all pairs of draw curves for intersection points."""
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must be in (0, 1), got {alpha}")
    num, den = functions_to_arrays(functions)
    m = len(functions)
    roots_parts = []
    identical_count = 0
    for ia, ib in _pair_chunks(m, pair_chunk):
        roots, _, identical = kernels.cross_roots_indexed(num, den, ia, ib)
        roots_parts.append(roots)
        identical_count += int(identical.sum())
    roots_all = (
        np.concatenate(roots_parts) if roots_parts else np.empty(0, dtype=np.float64)
    )
    intersections = _cluster_sorted(np.sort(roots_all))
    return QuantileEnvelope(
        functions=functions,
        alpha=alpha,
        intersections=intersections,
        num_pairs=comb(m, 2),
        num_identical_pairs=identical_count,
        _num=num,
        _den=den,
    )


def build_envelope(
    draws: DrawSet,
    data: ExperimentData,
    adjusted: bool,
    alpha: float,
    pair_chunk: int = PAIR_CHUNK,
) -> QuantileEnvelope:
    """Critical-value curve of a draw set: one squared-statistic curve per
    draw, crossed pairwise to locate every point where the draw attaining
    the critical value can change."""
    _check_compatible(data, draws)
    fns = draw_functions(data, draws, adjusted=adjusted)
    return envelope_from_functions(fns, alpha, pair_chunk)


def _segment_edges(intersections: np.ndarray) -> np.ndarray:
    return np.concatenate([[-INF], intersections, [INF]])


def _segment_probes(edges: np.ndarray) -> np.ndarray:
    """One interior evaluation point per segment."""
    k = edges.size - 1
    probes = np.empty(k, dtype=np.float64)
    if k == 1:
        probes[0] = 0.0
        return probes
    probes[0] = edges[1] - 1.0
    probes[-1] = edges[-2] + 1.0
    if k > 2:
        probes[1:-1] = 0.5 * (edges[1:-2] + edges[2:-1])
    return probes


def _realizing_indices(env: QuantileEnvelope, probes: np.ndarray, chunk: int):
    """Smallest critical-value-attaining draw index for each probe point."""
    need = quantile_index(env.m, env.alpha)
    out = np.empty(probes.size, dtype=np.int64)
    for start in range(0, probes.size, chunk):
        vals = env.values_at(probes[start : start + chunk])
        q = np.partition(vals, need - 1, axis=1)[:, need - 1]
        tol = INDEX_SET_RTOL * np.maximum(1.0, np.abs(q))
        hit = np.abs(vals - q[:, None]) <= tol[:, None]
        out[start : start + chunk] = np.argmax(hit, axis=1)
    return out


def _observed_cross(obs: RationalQuadratic, env: QuantileEnvelope, indices):
    """Cross polynomials (and their roots) of the observed curve against
    the given draw curves; the confidence set on a segment realized by
    draw t is where the cross polynomial against t is nonpositive."""
    indices = np.asarray(indices, dtype=np.int64)
    obs_num = np.array([obs.num], dtype=np.float64)
    obs_den = np.array([obs.den], dtype=np.float64)
    numS = np.vstack([obs_num, env._num])
    denS = np.vstack([obs_den, env._den])
    ia = np.zeros(indices.size, dtype=np.int64)
    ib = indices + 1
    coeffs, _ = cross_coeffs(numS[ia], denS[ia], numS[ib], denS[ib])
    roots, owner, identical = kernels.cross_roots_indexed(numS, denS, ia, ib)
    per_row_roots = [roots[owner == r] for r in range(indices.size)]
    polys = [Poly4.from_coeffs(coeffs[r]) for r in range(indices.size)]
    return polys, per_row_roots, identical


def _invert_runs(obs, env, run_windows, run_indices):
    """Assemble the confidence set from (window, realizing draw) runs."""
    unique_t, inverse = np.unique(run_indices, return_inverse=True)
    polys, per_roots, identical = _observed_cross(obs, env, unique_t)
    pieces: list[tuple[float, float]] = []
    for r, (lo, hi) in enumerate(run_windows):
        u = inverse[r]
        if identical[u]:
            pieces.append((lo, hi))
            continue
        region = nonpositivity_region(polys[u], (lo, hi), roots=per_roots[u])
        pieces.extend(region.intervals)
    return IntervalUnion.from_pieces(pieces)


def _merge_runs(edges: np.ndarray, indices: np.ndarray):
    """Collapse consecutive segments realized by the same draw into one
    window; the union of per-segment inversions is unchanged."""
    windows, run_idx = [], []
    start = 0
    for s in range(1, indices.size + 1):
        if s == indices.size or indices[s] != indices[start]:
            windows.append((float(edges[start]), float(edges[s])))
            run_idx.append(int(indices[start]))
            start = s
    return windows, np.asarray(run_idx, dtype=np.int64)


@dataclass(frozen=True)
class ConfidenceSetResult:
    intervals: IntervalUnion
    alpha: float
    m: int
    adjusted: bool
    wald: float | None
    algorithm: str
    stats: dict

    def to_jsonable(self) -> dict:
        return {
            "alpha": self.alpha,
            "m": self.m,
            "adjusted": self.adjusted,
            "wald": self.wald,
            "algorithm": self.algorithm,
            "intervals": self.intervals.to_jsonable(),
            "stats": self.stats,
        }

    def to_text(self) -> str:
        lines = [
            f"algorithm: {self.algorithm}",
            f"alpha: {self.alpha}",
            f"draws: {self.m}",
            f"adjusted: {self.adjusted}",
            f"wald: {'undefined' if self.wald is None else f'{self.wald:.6g}'}",
            "confidence set:",
        ]
        if self.intervals.is_empty():
            lines.append("  (empty)")
        for lo, hi in self.intervals.intervals:
            lines.append(f"  [{lo:.6g}, {hi:.6g}]")
        lines.append(
            "stats: "
            + ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                        for k, v in self.stats.items())
        )
        return "\n".join(lines)


def _wald_or_none(data: ExperimentData, adjusted: bool) -> float | None:
    """Point estimate matching the requested statistic; the adjusted set is
    only guaranteed to contain the adjusted ratio estimator."""
    est = adjusted_wald(data) if adjusted else wald(data)
    return est.value if est.defined else None


def _prepare(data: ExperimentData, draws: DrawSet, alpha: float, adjusted: bool):
    _check_compatible(data, draws)
    obs = observed_function(data, adjusted=adjusted)
    env = build_envelope(draws, data, adjusted, alpha)
    return obs, env


def build_cs_baseline(
    data: ExperimentData,
    draws: DrawSet,
    alpha: float,
    adjusted: bool = False,
) -> ConfidenceSetResult:
    """Invert the test on every segment cut by every pairwise crossing."""
    t0 = time.perf_counter()
    obs, env = _prepare(data, draws, alpha, adjusted)
    edges = _segment_edges(env.intersections)
    probes = _segment_probes(edges)
    indices = _realizing_indices(env, probes, SEGMENT_CHUNK)
    windows, run_idx = _merge_runs(edges, indices)
    intervals = _invert_runs(obs, env, windows, run_idx)
    stats = {
        "num_pairs": env.num_pairs,
        "num_intersections": int(env.intersections.size),
        "num_segments": int(probes.size),
        "wall_time": time.perf_counter() - t0,
    }
    return ConfidenceSetResult(
        intervals=intervals,
        alpha=alpha,
        m=env.m,
        adjusted=adjusted,
        wald=_wald_or_none(data, adjusted),
        algorithm="baseline",
        stats=stats,
    )


def _function_roots(env: QuantileEnvelope, s: int) -> np.ndarray:
    """Sorted crossings of draw s with every other non-identical draw."""
    m = env.m
    others = np.concatenate(
        [np.arange(s, dtype=np.int64), np.arange(s + 1, m, dtype=np.int64)]
    )
    if others.size == 0:
        return np.empty(0, dtype=np.float64)
    ia = np.full(others.size, s, dtype=np.int64)
    roots, _, _ = kernels.cross_roots_indexed(env._num, env._den, ia, others)
    return np.sort(roots)


def build_cs_fast(
    data: ExperimentData,
    draws: DrawSet,
    alpha: float,
    adjusted: bool = False,
) -> ConfidenceSetResult:
    """Walk the critical curve left to right, jumping directly to the next
    crossing that involves the draw currently attaining the critical
    value; crossings between other draws cannot change the curve."""
    t0 = time.perf_counter()
    obs, env = _prepare(data, draws, alpha, adjusted)
    grid = env.intersections
    windows: list[tuple[float, float]] = []
    run_idx: list[int] = []
    if grid.size == 0:
        s = env.realizing_index_at(0.0)
        windows.append((-INF, INF))
        run_idx.append(s)
    else:
        s = env.realizing_index_at(float(grid[0]) - 1.0)
        roots_cache: dict[int, np.ndarray] = {}
        e_prev = -INF
        for _ in range(grid.size + 2):
            if s not in roots_cache:
                roots_cache[s] = _function_roots(env, s)
            roots_s = roots_cache[s]
            cut = -INF if e_prev == -INF else e_prev + merge_tol(e_prev)
            pos = int(np.searchsorted(roots_s, cut, side="right"))
            if pos >= roots_s.size:
                windows.append((e_prev, INF))
                run_idx.append(s)
                break
            e = float(roots_s[pos])
            windows.append((e_prev, e))
            run_idx.append(s)
            nxt = int(np.searchsorted(grid, e + merge_tol(e), side="right"))
            probe = e + 1.0 if nxt >= grid.size else 0.5 * (e + float(grid[nxt]))
            s = env.realizing_index_at(probe)
            e_prev = e
        else:
            raise RuntimeError("critical-curve walk failed to terminate")
    intervals = _invert_runs(obs, env, windows, np.asarray(run_idx, dtype=np.int64))
    stats = {
        "num_pairs": env.num_pairs,
        "num_intersections": int(grid.size),
        "num_segments": len(windows),
        "wall_time": time.perf_counter() - t0,
    }
    return ConfidenceSetResult(
        intervals=intervals,
        alpha=alpha,
        m=env.m,
        adjusted=adjusted,
        wald=_wald_or_none(data, adjusted),
        algorithm="fast",
        stats=stats,
    )


@dataclass(frozen=True)
class GridResult:
    betas: np.ndarray
    member: np.ndarray
    observed_sq: np.ndarray
    quantiles: np.ndarray

    def __iter__(self):
        """Iterate as (beta, member) pairs."""
        return zip(self.betas.tolist(), (bool(v) for v in self.member))

    def to_intervals(self) -> IntervalUnion:
        """Closed intervals spanning maximal runs of member grid points."""
        pieces = []
        start = None
        for i, flag in enumerate(self.member):
            if flag and start is None:
                start = i
            elif not flag and start is not None:
                pieces.append((float(self.betas[start]), float(self.betas[i - 1])))
                start = None
        if start is not None:
            pieces.append((float(self.betas[start]), float(self.betas[-1])))
        return IntervalUnion.from_pieces(pieces)


def build_cs_grid(
    data: ExperimentData,
    draws: DrawSet,
    alpha: float,
    adjusted: bool = False,
    betas=None,
    lo: float | None = None,
    hi: float | None = None,
    step: float | None = None,
) -> GridResult:
    """Pointwise test inversion on a grid, given either explicitly as
    ``betas`` or as an inclusive arithmetic range ``lo``/``hi``/``step``.

    The observed statistic is recomputed from raw sums at every point,
    independently of the coefficient representation, so this path serves
    as an oracle for the closed-form algorithms.
    """
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must be in (0, 1), got {alpha}")
    _check_compatible(data, draws)
    if betas is None:
        if lo is None or hi is None or step is None:
            raise InputError("provide either betas or all of lo, hi, step")
        if not lo < hi:
            raise InputError(f"need lo < hi, got lo={lo}, hi={hi}")
        if not step > 0:
            raise InputError(f"need step > 0, got {step}")
        betas = np.arange(lo, hi + 0.5 * step, step)
    betas = np.asarray(betas, dtype=np.float64)
    fns = draw_functions(data, draws, adjusted=adjusted)
    num, den = functions_to_arrays(fns)
    b = betas[:, None]
    vals = ((num[:, 0] * b + num[:, 1]) * b + num[:, 2]) / (
        (den[:, 0] * b + den[:, 1]) * b + den[:, 2]
    )
    need = quantile_index(len(fns), alpha)
    quantiles = np.partition(vals, need - 1, axis=1)[:, need - 1]
    observed_sq = np.array(
        [direct_delta(data, data.z, float(beta), adjusted) ** 2 for beta in betas]
    )
    member = observed_sq <= quantiles
    return GridResult(
        betas=betas, member=member, observed_sq=observed_sq, quantiles=quantiles
    )


def confidence_set(
    data: ExperimentData,
    draws: DrawSet,
    alpha: float,
    adjusted: bool = False,
    algorithm: str = "fast",
    grid_betas=None,
) -> ConfidenceSetResult:
    """Dispatch on algorithm name: "fast", "baseline", or "grid"."""
    if algorithm == "fast":
        return build_cs_fast(data, draws, alpha, adjusted)
    if algorithm == "baseline":
        return build_cs_baseline(data, draws, alpha, adjusted)
    if algorithm == "grid":
        if grid_betas is None:
            raise InputError("grid algorithm needs an explicit beta grid")
        t0 = time.perf_counter()
        grid = build_cs_grid(data, draws, alpha, adjusted, betas=grid_betas)
        return ConfidenceSetResult(
            intervals=grid.to_intervals(),
            alpha=alpha,
            m=draws.m,
            adjusted=adjusted,
            wald=_wald_or_none(data, adjusted),
            algorithm="grid",
            stats={
                "num_pairs": 0,
                "num_intersections": 0,
                "num_segments": int(np.count_nonzero(grid.member)),
                "wall_time": time.perf_counter() - t0,
            },
        )
    raise InputError(f"unknown algorithm {algorithm!r}")

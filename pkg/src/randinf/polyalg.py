"""Polynomial differences of rational quadratics and interval algebra.

Comparisons between two statistics f and g with positive denominators
reduce to the sign of the intersection polynomial
num_f*den_g - num_g*den_f, a polynomial of degree at most four.
Confidence sets are unions of closed intervals over the extended reals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from ._kernel_py import (
    DEDUP_RTOL,
    DEGREE_RTOL,
    IDENTICAL_RTOL,
    IMAG_RTOL,
    cross_coeffs,
    poly_real_roots_batch,
)
from .arfunc import RationalQuadratic

# Gap below which adjacent interval endpoints are merged.
MERGE_RTOL = 1e-9

INF = float("inf")


def merge_tol(endpoint: float) -> float:
    if not np.isfinite(endpoint):
        return MERGE_RTOL
    return MERGE_RTOL * (1.0 + abs(endpoint))


@dataclass(frozen=True)
class Poly4:
    """Polynomial of degree at most four, ascending coefficients.

    ``scale`` is the largest absolute coefficient; it anchors the
    relative threshold that decides the effective degree.
    """

    coeffs: tuple[float, float, float, float, float]
    scale: float

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[float]) -> "Poly4":
        c = [float(v) for v in coeffs]
        if len(c) > 5:
            raise ValueError("degree above four is not representable")
        c += [0.0] * (5 - len(c))
        return cls(coeffs=tuple(c), scale=max(abs(v) for v in c))

    @property
    def degree(self) -> int:
        if self.scale == 0.0:
            return 0
        thresh = DEGREE_RTOL * self.scale
        for k in (4, 3, 2, 1):
            if abs(self.coeffs[k]) > thresh:
                return k
        return 0

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        acc = np.zeros_like(x)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def is_zero(self) -> bool:
        return self.scale == 0.0


def intersection_polynomial(f: RationalQuadratic, g: RationalQuadratic) -> Poly4:
    """num_f*den_g - num_g*den_f; its sign is the sign of f - g, and its
    real roots are the crossing points of the two curves."""
    numa = np.array([f.num], dtype=np.float64)
    dena = np.array([f.den], dtype=np.float64)
    numb = np.array([g.num], dtype=np.float64)
    denb = np.array([g.den], dtype=np.float64)
    coeffs, _ = cross_coeffs(numa, dena, numb, denb)
    return Poly4.from_coeffs(coeffs[0])


def is_identical(f: RationalQuadratic, g: RationalQuadratic) -> bool:
    """True when f and g define the same function of beta, judged on the
    cross polynomial relative to the scale of its products."""
    numa = np.array([f.num], dtype=np.float64)
    dena = np.array([f.den], dtype=np.float64)
    numb = np.array([g.num], dtype=np.float64)
    denb = np.array([g.den], dtype=np.float64)
    coeffs, scale = cross_coeffs(numa, dena, numb, denb)
    return float(np.abs(coeffs).max()) <= IDENTICAL_RTOL * max(float(scale[0]), 1e-300)


def real_roots(poly: Poly4) -> np.ndarray:
    """Sorted distinct real roots; multiple roots collapse to one entry."""
    if poly.is_zero():
        raise ValueError("the zero polynomial has no root set")
    roots, _ = poly_real_roots_batch(
        np.array([poly.coeffs]), DEGREE_RTOL, IMAG_RTOL, DEDUP_RTOL
    )
    return roots


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted union of disjoint closed intervals over the extended reals."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        prev_hi = -INF
        for i, (lo, hi) in enumerate(self.intervals):
            if lo > hi:
                raise ValueError(f"interval {i} has lo > hi: ({lo}, {hi})")
            if i > 0 and lo <= prev_hi:
                raise ValueError("intervals must be sorted and disjoint")
            prev_hi = hi

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(intervals=())

    @classmethod
    def whole_line(cls) -> "IntervalUnion":
        return cls(intervals=((-INF, INF),))

    @classmethod
    def from_pieces(
        cls, pieces: Iterable[tuple[float, float]], tol: bool = True
    ) -> "IntervalUnion":
        """Union of arbitrary closed pieces; overlapping or nearly touching
        pieces (gap within the merge tolerance) become one interval."""
        items = sorted((float(lo), float(hi)) for lo, hi in pieces if lo <= hi)
        merged: list[list[float]] = []
        for lo, hi in items:
            if merged:
                gap = lo - merged[-1][1]
                limit = merge_tol(max(abs(lo), abs(merged[-1][1]))) if tol else 0.0
                if gap <= limit:
                    merged[-1][1] = max(merged[-1][1], hi)
                    continue
            merged.append([lo, hi])
        return cls(intervals=tuple((lo, hi) for lo, hi in merged))

    @property
    def count(self) -> int:
        return len(self.intervals)

    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, x: float, slack: float = 0.0) -> bool:
        for lo, hi in self.intervals:
            if lo - slack <= x <= hi + slack:
                return True
        return False

    def intersect_window(self, lo: float, hi: float) -> "IntervalUnion":
        pieces = []
        for a, b in self.intervals:
            a2, b2 = max(a, lo), min(b, hi)
            if a2 <= b2:
                pieces.append((a2, b2))
        return IntervalUnion(intervals=tuple(pieces))

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion.from_pieces([*self.intervals, *other.intervals])

    def finite_length(self) -> float:
        """Total length of the bounded part."""
        total = 0.0
        for lo, hi in self.intervals:
            if np.isfinite(lo) and np.isfinite(hi):
                total += hi - lo
        return total

    def is_bounded(self) -> bool:
        return all(np.isfinite(v) for iv in self.intervals for v in iv)

    def subset_of(self, other: "IntervalUnion", slack: float = 0.0) -> bool:
        """Every point of self lies in other, allowing endpoint slack."""
        for lo, hi in self.intervals:
            covered = False
            for olo, ohi in other.intervals:
                if olo - slack <= lo and hi <= ohi + slack:
                    covered = True
                    break
            if not covered:
                return False
        return True

    def to_jsonable(self) -> list[list[object]]:
        def enc(v: float) -> object:
            if v == INF:
                return "inf"
            if v == -INF:
                return "-inf"
            return v

        return [[enc(lo), enc(hi)] for lo, hi in self.intervals]

    @classmethod
    def from_jsonable(cls, payload: Sequence[Sequence[object]]) -> "IntervalUnion":
        def dec(v: object) -> float:
            if isinstance(v, str):
                return float(v)
            return float(v)

        return cls(intervals=tuple((dec(lo), dec(hi)) for lo, hi in payload))


def nonpositivity_region(
    poly: Poly4,
    window: tuple[float, float] = (-INF, INF),
    roots: np.ndarray | None = None,
) -> IntervalUnion:
    """Closed subset of ``window`` where the polynomial is <= 0.

    The zero polynomial yields the whole window.  Isolated roots where
    the sign does not change are kept as degenerate intervals, since the
    inequality is not strict.  Precomputed ``roots`` may be supplied to
    avoid re-solving.
    """
    lo, hi = float(window[0]), float(window[1])
    if lo > hi:
        return IntervalUnion.empty()
    if poly.is_zero():
        return IntervalUnion(intervals=((lo, hi),))
    if roots is None:
        roots = real_roots(poly)
    inside = roots[(roots > lo) & (roots < hi)]
    bounds = [lo, *np.sort(inside), hi]
    pieces: list[tuple[float, float]] = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        if np.isinf(a) and np.isinf(b):
            sample = 0.0
        elif np.isinf(a):
            sample = b - 1.0
        elif np.isinf(b):
            sample = a + 1.0
        else:
            sample = 0.5 * (a + b)
        if float(poly(sample)) <= 0.0:
            pieces.append((a, b))
    for r in inside:
        pieces.append((float(r), float(r)))
    if np.isfinite(lo) and float(poly(lo)) <= 0.0:
        pieces.append((lo, lo))
    if np.isfinite(hi) and float(poly(hi)) <= 0.0:
        pieces.append((hi, hi))
    return IntervalUnion.from_pieces(pieces, tol=False)

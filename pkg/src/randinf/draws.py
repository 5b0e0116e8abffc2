"""Reference assignment draws: Monte Carlo sampling and exhaustive enumeration."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DegenerateDesign, InputError, TooManyAssignments

ENUMERATION_CAP = 10**6


@dataclass(frozen=True)
class DrawSet:
    """A set of m assignment vectors, one per row, each with n1 ones.

    ``seed`` records how a Monte Carlo set was generated and is None for
    enumerated or hand-built sets.
    """

    draws: np.ndarray
    n1: int
    seed: int | None = None

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=np.uint8)
        if draws.ndim != 2:
            raise InputError("draws must be a 2-d matrix")
        if not np.all((draws == 0) | (draws == 1)):
            raise InputError("draws must contain only 0 or 1")
        if not np.all(draws.sum(axis=1) == self.n1):
            raise InputError(f"every draw must assign exactly n1={self.n1} units")
        object.__setattr__(self, "draws", draws)

    @property
    def m(self) -> int:
        return self.draws.shape[0]

    @property
    def n(self) -> int:
        return self.draws.shape[1]

    def with_observed(self, z: np.ndarray) -> "DrawSet":
        """Return a new set with the observed assignment appended."""
        z = np.asarray(z, dtype=np.uint8).reshape(1, -1)
        return DrawSet(np.vstack([self.draws, z]), n1=self.n1, seed=self.seed)

    def to_text(self) -> str:
        """Compact audit format: a header line, then one 0/1 string per draw."""
        seed = "none" if self.seed is None else str(self.seed)
        lines = [f"# n={self.n} n1={self.n1} m={self.m} seed={seed}"]
        lines += ["".join("1" if v else "0" for v in row) for row in self.draws]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DrawSet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise InputError("draw-set text must start with a '#' header line")
        fields = dict(tok.split("=") for tok in lines[0][1:].split())
        n, n1, m = int(fields["n"]), int(fields["n1"]), int(fields["m"])
        seed = None if fields.get("seed", "none") == "none" else int(fields["seed"])
        if len(lines) - 1 != m:
            raise InputError(f"header says m={m} but found {len(lines) - 1} rows")
        draws = np.array(
            [[int(c) for c in ln.strip()] for ln in lines[1:]], dtype=np.uint8
        ).reshape(m, n)
        return cls(draws=draws, n1=n1, seed=seed)


def _check_design(n: int, n1: int) -> None:
    if n1 < 2 or n - n1 < 2:
        raise DegenerateDesign(f"need 2 <= n1 <= n-2, got n={n}, n1={n1}")


def draw_assignments(n: int, n1: int, m: int, seed: int) -> DrawSet:
    """Sample m assignments uniformly (with replacement) from all n1-of-n
    treatment patterns, using a counter-based generator for cross-platform
    reproducibility.

    Each draw is the first n1 positions of a partial Fisher-Yates shuffle,
    run for all m draws at once.
    """
    _check_design(n, n1)
    if m < 1:
        raise InputError(f"m must be >= 1, got {m}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    idx = np.tile(np.arange(n, dtype=np.int64), (m, 1))
    rows = np.arange(m)
    for j in range(n1):
        r = rng.integers(j, n, size=m)
        tmp = idx[rows, r].copy()
        idx[rows, r] = idx[:, j]
        idx[:, j] = tmp
    draws = np.zeros((m, n), dtype=np.uint8)
    draws[rows[:, None], idx[:, :n1]] = 1
    return DrawSet(draws=draws, n1=n1, seed=int(seed))


def enumerate_assignments(n: int, n1: int, cap: int = ENUMERATION_CAP) -> DrawSet:
    """All C(n, n1) assignments, ordered lexicographically as 0/1 vectors.

    Raises TooManyAssignments when C(n, n1) exceeds ``cap``.
    """
    _check_design(n, n1)
    total = comb(n, n1)
    if total > cap:
        raise TooManyAssignments(f"C({n}, {n1}) = {total} exceeds cap {cap}")
    draws = np.zeros((total, n), dtype=np.uint8)
    # Ascending position tuples give descending 0/1-vector order, so fill
    # the matrix back to front.
    for i, pos in enumerate(itertools.combinations(range(n), n1)):
        draws[total - 1 - i, list(pos)] = 1
    return DrawSet(draws=draws, n1=n1, seed=None)

"""Experiment container, CSV input/output, and basic diagnostics.

The unit of analysis is a completely randomized experiment with imperfect
take-up: ``z`` is the assigned arm, ``d`` the realized take-up, ``y`` the
outcome, and ``x`` optional covariates stored column-demeaned.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateDesign,
    InputError,
    MissingColumn,
    NonBinaryColumn,
    NonFiniteValue,
)

# Column sums of x must vanish to this relative tolerance.
DEMEAN_RTOL = 1e-10


def _demean_columns(x: np.ndarray) -> np.ndarray:
    """Subtract column means, skipping columns that are already centered.

    Skipping keeps the operation exactly idempotent, so a write/read
    round trip reproduces the stored matrix bit for bit.
    """
    if x.size == 0:
        return x
    out = x.copy()
    scale = max(1.0, float(np.max(np.abs(x))))
    sums = out.sum(axis=0)
    needs = np.abs(sums) > DEMEAN_RTOL * scale
    if np.any(needs):
        out[:, needs] -= out[:, needs].mean(axis=0)
    return out


@dataclass(frozen=True)
class ExperimentData:
    """Validated arrays for one experiment.

    Build instances through :meth:`from_arrays` or :func:`load_csv`; the
    constructor itself only checks invariants and expects ``x`` to be
    demeaned already.
    """

    y: np.ndarray
    d: np.ndarray
    z: np.ndarray
    x: np.ndarray
    n1: int = field(init=False)
    n0: int = field(init=False)
    pi: float = field(init=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        d = np.asarray(self.d, dtype=np.float64)
        z = np.asarray(self.z, dtype=np.float64)
        x = np.asarray(self.x, dtype=np.float64)
        if y.ndim != 1 or d.shape != y.shape or z.shape != y.shape:
            raise InputError("y, d, z must be one-dimensional and equal length")
        n = y.shape[0]
        if x.ndim != 2 or x.shape[0] != n:
            raise InputError("x must be a 2-d array with one row per unit")
        for name, arr in (("y", y), ("d", d), ("z", z), ("x", x)):
            if not np.all(np.isfinite(arr)):
                raise NonFiniteValue(f"column {name} contains a non-finite value")
        for name, arr in (("d", d), ("z", z)):
            if not np.all((arr == 0.0) | (arr == 1.0)):
                raise NonBinaryColumn(f"column {name} must contain only 0 or 1")
        n1 = int(round(float(z.sum())))
        if n1 < 2 or n - n1 < 2:
            raise DegenerateDesign(
                f"need at least two units per arm, got n1={n1}, n0={n - n1}"
            )
        if x.shape[1] > 0:
            scale = max(1.0, float(np.max(np.abs(x))))
            if float(np.max(np.abs(x.sum(axis=0)))) > DEMEAN_RTOL * scale:
                raise InputError("covariate columns must be demeaned")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "n1", n1)
        object.__setattr__(self, "n0", n - n1)
        object.__setattr__(self, "pi", n1 / n)

    @classmethod
    def from_arrays(cls, y, d, z, x=None, demean: bool = True) -> "ExperimentData":
        y = np.asarray(y, dtype=np.float64)
        if x is None:
            x = np.empty((y.shape[0], 0), dtype=np.float64)
        else:
            x = np.asarray(x, dtype=np.float64)
            if x.ndim == 1:
                x = x[:, None]
            if demean:
                x = _demean_columns(np.ascontiguousarray(x, dtype=np.float64))
        return cls(y=y, d=d, z=z, x=x)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class DataDiagnostics:
    n: int
    n1: int
    n0: int
    k: int
    takeup_rate_treated: float
    takeup_rate_control: float
    estimated_compliance: float
    monotonicity_flag: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "n1": self.n1,
            "n0": self.n0,
            "k": self.k,
            "takeup_rate_treated": self.takeup_rate_treated,
            "takeup_rate_control": self.takeup_rate_control,
            "estimated_compliance": self.estimated_compliance,
            "monotonicity_flag": self.monotonicity_flag,
        }


def diagnose(data: ExperimentData) -> DataDiagnostics:
    """Summarize take-up by arm.

    ``estimated_compliance`` is the difference of arm take-up rates;
    ``monotonicity_flag`` is False when the control arm takes up more
    often than the treated arm, which is incompatible with one-sided
    noncompliance.
    """
    z = data.z
    rate1 = float(data.d[z == 1.0].mean())
    rate0 = float(data.d[z == 0.0].mean())
    comp = rate1 - rate0
    return DataDiagnostics(
        n=data.n,
        n1=data.n1,
        n0=data.n0,
        k=data.k,
        takeup_rate_treated=rate1,
        takeup_rate_control=rate0,
        estimated_compliance=comp,
        monotonicity_flag=comp >= 0.0,
    )


def _parse_float(raw: str, row: int, col: str) -> float:
    try:
        val = float(raw)
    except ValueError:
        raise NonFiniteValue(f"row {row}, column {col}: cannot parse {raw!r}") from None
    if not math.isfinite(val):
        raise NonFiniteValue(f"row {row}, column {col}: non-finite value {raw!r}")
    return val


def load_csv(
    path,
    y_col: str = "Y",
    d_col: str = "D",
    z_col: str = "Z",
    x_cols: Sequence[str] = (),
    demean: bool = True,
) -> ExperimentData:
    """Read an experiment from a headed CSV file.

    ``d_col`` and ``z_col`` must parse to exactly 0 or 1 in every row.
    Covariate columns are demeaned unless ``demean`` is False.
    """
    x_cols = list(x_cols)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InputError(f"{path}: empty file, expected a header row")
        header = [h.strip() for h in reader.fieldnames]
        for col in [y_col, d_col, z_col, *x_cols]:
            if col not in header:
                raise MissingColumn(f"{path}: column {col!r} not in header {header}")
        y, d, z, xrows = [], [], [], []
        for i, row in enumerate(reader, start=1):
            row = {k.strip(): v for k, v in row.items() if k is not None}
            y.append(_parse_float(row[y_col], i, y_col))
            for col, dest in ((d_col, d), (z_col, z)):
                val = _parse_float(row[col], i, col)
                if val not in (0.0, 1.0):
                    raise NonBinaryColumn(
                        f"row {i}, column {col}: expected 0 or 1, got {val!r}"
                    )
                dest.append(val)
            xrows.append([_parse_float(row[c], i, c) for c in x_cols])
    if not y:
        raise InputError(f"{path}: no data rows")
    x = np.asarray(xrows, dtype=np.float64).reshape(len(y), len(x_cols))
    return ExperimentData.from_arrays(y, d, z, x, demean=demean)


def write_csv(data: ExperimentData, path) -> None:
    """Write the experiment with full float precision so that a reload
    (with demeaning on) reproduces every field exactly."""
    xnames = [f"X{j + 1}" for j in range(data.k)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["Y", "D", "Z", *xnames])
        for i in range(data.n):
            row = [repr(float(data.y[i])), int(data.d[i]), int(data.z[i])]
            row += [repr(float(v)) for v in data.x[i]]
            writer.writerow(row)

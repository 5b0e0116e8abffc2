"""Studentized test statistics as rational-quadratic functions of beta.

For a fixed experiment and one assignment vector (observed or a reference
draw), the squared studentized statistic is

    delta_sq(beta) = (a*beta^2 + b*beta + c) / (d*beta^2 + e*beta + f)

whose numerator is a perfect square and whose denominator is positive on
the whole real line unless the data are degenerate.  Storing the six
coefficients lets the confidence-set algorithms work with closed-form
curves instead of pointwise evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import ExperimentData
from .draws import DrawSet
from .errors import DegenerateVariance, SingularDesign, ZeroVariance

# Relative floor used to declare the denominator strictly positive on R.
DEN_POSITIVITY_RTOL = 1e-12
# Tolerance on the perfect-square identity b^2 = 4ac of the numerator.
SQUARE_RTOL = 1e-9
PINV_RCOND = 1e-12

_DEGENERATE_MSG = (
    "variance is not strictly positive for every beta: the outcomes are "
    "exactly parallel to the take-ups within both arms, so the studentized "
    "statistic is undefined"
)


def _den_min_on_r(d: float, e: float, f: float) -> float:
    """Minimum of d*b^2 + e*b + f over the real line (-inf if unbounded below).

    Leading coefficients within the positivity floor of zero are treated
    as zero; they are rounding residue of exactly-vanishing sums.
    """
    floor = DEN_POSITIVITY_RTOL * max(abs(d), abs(e), abs(f), 1.0)
    if d > floor:
        return f - e * e / (4.0 * d)
    if abs(d) <= floor and abs(e) <= floor:
        return f
    return -np.inf


@dataclass(frozen=True)
class RationalQuadratic:
    """One squared statistic as a ratio of two quadratics in beta.

    ``num`` holds (a, b, c) and ``den`` holds (d, e, f), both in
    descending powers.  ``source`` is "observed" or the draw row index.
    """

    num: tuple[float, float, float]
    den: tuple[float, float, float]
    kind: str
    source: object = "observed"
    used_pseudo_inverse: bool = False

    def __post_init__(self):
        a, b, c = self.num
        d, e, f = self.den
        if a < -1e-12 or c < -1e-12:
            raise ValueError(f"numerator quadratic must be a square, got a={a}, c={c}")
        if abs(b * b - 4.0 * a * c) > SQUARE_RTOL * max(1.0, a * c, b * b):
            raise ValueError("numerator quadratic is not a perfect square")
        scale = max(abs(d), abs(e), abs(f), 1.0)
        if _den_min_on_r(d, e, f) < DEN_POSITIVITY_RTOL * scale:
            raise DegenerateVariance(_DEGENERATE_MSG)

    def __call__(self, betas):
        return evaluate_delta_sq(self, betas)


def evaluate_delta_sq(fn: RationalQuadratic, betas) -> np.ndarray:
    """Evaluate the squared statistic at one or many beta values."""
    b = np.asarray(betas, dtype=np.float64)
    a0, a1, a2 = fn.num
    d0, d1, d2 = fn.den
    return ((a0 * b + a1) * b + a2) / ((d0 * b + d1) * b + d2)


def functions_to_arrays(
    fns: Sequence[RationalQuadratic],
) -> tuple[np.ndarray, np.ndarray]:
    """Stack coefficient tuples into (m, 3) numerator/denominator arrays."""
    num = np.array([fn.num for fn in fns], dtype=np.float64)
    den = np.array([fn.den for fn in fns], dtype=np.float64)
    return num, den


def _unadjusted_parts(data: ExperimentData, zmat: np.ndarray):
    """Coefficient arrays for a batch of assignment rows, no covariates.

    All quantities reduce to inner products with the rows of ``zmat``,
    so the whole batch is a handful of matrix-vector products.
    """
    y, d = data.y, data.d
    n, n1, n0, pi = data.n, data.n1, data.n0, data.pi
    kappa = (pi * (1.0 - pi)) ** 2

    sy_tot, sd_tot = y.sum(), d.sum()
    syy_tot = float(y @ y)
    sdd_tot = float(d @ d)
    syd_tot = float(y @ d)

    zy = zmat @ y
    zd = zmat @ d
    zyy = zmat @ (y * y)
    zdd = zmat @ (d * d)
    zyd = zmat @ (y * d)

    s_y = zy / n - pi * sy_tot / n
    s_d = zd / n - pi * sd_tot / n
    a = s_d * s_d
    b = -2.0 * s_y * s_d
    c = s_y * s_y

    # Centered second moments within each arm.
    v1_yy = zyy - zy * zy / n1
    v1_dd = zdd - zd * zd / n1
    v1_yd = zyd - zy * zd / n1
    ty, td = sy_tot - zy, sd_tot - zd
    v0_yy = (syy_tot - zyy) - ty * ty / n0
    v0_dd = (sdd_tot - zdd) - td * td / n0
    v0_yd = (syd_tot - zyd) - ty * td / n0

    dd = kappa * (v1_dd / n1**2 + v0_dd / n0**2)
    ee = -2.0 * kappa * (v1_yd / n1**2 + v0_yd / n0**2)
    ff = kappa * (v1_yy / n1**2 + v0_yy / n0**2)
    return np.column_stack([a, b, c]), np.column_stack([dd, ee, ff])


def _arm_fit(u: np.ndarray, x: np.ndarray):
    """OLS of each column of ``u`` on an intercept plus ``x``.

    Returns (coef, residuals, used_pinv) where coef has shape
    (1 + k, n_responses).  Falls back to a pseudo-inverse when the normal
    equations are singular.
    """
    design = np.column_stack([np.ones(u.shape[0]), x])
    gram = design.T @ design
    rhs = design.T @ u
    used_pinv = False
    try:
        coef = np.linalg.solve(gram, rhs)
        if not np.all(np.isfinite(coef)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        coef = np.linalg.pinv(gram, rcond=PINV_RCOND) @ rhs
        used_pinv = True
        if not np.all(np.isfinite(coef)):
            raise SingularDesign("pseudo-inverse produced non-finite coefficients")
    resid = u - design @ coef
    return coef, resid, used_pinv


def _adjusted_parts_single(data: ExperimentData, z: np.ndarray):
    """Coefficients of the covariate-adjusted statistic for one assignment."""
    one = z == 1.0
    x1, x0 = data.x[one], data.x[~one]
    u1 = np.column_stack([data.y[one], data.d[one]])
    u0 = np.column_stack([data.y[~one], data.d[~one]])
    coef1, res1, p1 = _arm_fit(u1, x1)
    coef0, res0, p0 = _arm_fit(u0, x0)
    n1, n0 = x1.shape[0], x0.shape[0]

    adj1 = u1.mean(axis=0) - x1.mean(axis=0) @ coef1[1:]
    adj0 = u0.mean(axis=0) - x0.mean(axis=0) @ coef0[1:]
    t_y, t_d = adj1 - adj0

    m1 = res1.T @ res1
    m0 = res0.T @ res0
    r_y = m1[0, 0] / n1**2 + m0[0, 0] / n0**2
    r_d = m1[1, 1] / n1**2 + m0[1, 1] / n0**2
    r_yd = m1[0, 1] / n1**2 + m0[0, 1] / n0**2

    num = (float(t_d * t_d), float(-2.0 * t_y * t_d), float(t_y * t_y))
    den = (float(r_d), float(-2.0 * r_yd), float(r_y))
    return num, den, (p1 or p0)


def _as_float_z(z) -> np.ndarray:
    return np.asarray(z, dtype=np.float64)


def unadjusted_coeffs(data: ExperimentData, z) -> RationalQuadratic:
    """Squared statistic for one assignment vector, ignoring covariates."""
    zmat = _as_float_z(z).reshape(1, -1)
    num, den = _unadjusted_parts(data, zmat)
    return RationalQuadratic(
        num=tuple(map(float, num[0])), den=tuple(map(float, den[0])), kind="unadjusted"
    )


def adjusted_coeffs(data: ExperimentData, z) -> RationalQuadratic:
    """Squared statistic for one assignment vector with covariate adjustment.

    With no covariates this reduces to the unadjusted statistic up to a
    common positive factor, so the squared function is unchanged.
    """
    num, den, used_pinv = _adjusted_parts_single(data, _as_float_z(z))
    return RationalQuadratic(
        num=num, den=den, kind="adjusted", used_pseudo_inverse=used_pinv
    )


def observed_function(data: ExperimentData, adjusted: bool = False) -> RationalQuadratic:
    fn = adjusted_coeffs(data, data.z) if adjusted else unadjusted_coeffs(data, data.z)
    return fn


def draw_functions(
    data: ExperimentData, draws: DrawSet, adjusted: bool = False
) -> list[RationalQuadratic]:
    """Coefficient functions for every draw row, in row order."""
    kind = "adjusted" if adjusted else "unadjusted"
    fns: list[RationalQuadratic] = []
    if adjusted:
        for i in range(draws.m):
            z = draws.draws[i].astype(np.float64)
            num, den, used_pinv = _adjusted_parts_single(data, z)
            fns.append(
                _make_draw_fn(num, den, kind, i, used_pinv)
            )
    else:
        zmat = draws.draws.astype(np.float64)
        nums, dens = _unadjusted_parts(data, zmat)
        for i in range(draws.m):
            fns.append(
                _make_draw_fn(
                    tuple(map(float, nums[i])), tuple(map(float, dens[i])), kind, i, False
                )
            )
    return fns


def _make_draw_fn(num, den, kind, index, used_pinv) -> RationalQuadratic:
    try:
        return RationalQuadratic(
            num=num, den=den, kind=kind, source=index, used_pseudo_inverse=used_pinv
        )
    except DegenerateVariance:
        raise DegenerateVariance(
            f"draw {index}: {_DEGENERATE_MSG}"
        ) from None


@dataclass(frozen=True)
class OlsFit:
    """Within-arm OLS of (y - beta*d) on an intercept plus covariates."""

    beta: float
    phi1: float
    phi0: float
    gamma1: np.ndarray
    gamma0: np.ndarray
    residuals: np.ndarray
    used_pseudo_inverse: bool


def fit_interacted_ols(data: ExperimentData, z, beta: float) -> OlsFit:
    """Fit the arm-by-arm regression underlying the adjusted statistic at
    one beta, returning residuals aligned with the unit order."""
    z = _as_float_z(z)
    u = data.y - beta * data.d
    one = z == 1.0
    coef1, res1, p1 = _arm_fit(u[one, None], data.x[one])
    coef0, res0, p0 = _arm_fit(u[~one, None], data.x[~one])
    residuals = np.empty(data.n, dtype=np.float64)
    residuals[one] = res1[:, 0]
    residuals[~one] = res0[:, 0]
    return OlsFit(
        beta=float(beta),
        phi1=float(coef1[0, 0]),
        phi0=float(coef0[0, 0]),
        gamma1=coef1[1:, 0].copy(),
        gamma0=coef0[1:, 0].copy(),
        residuals=residuals,
        used_pseudo_inverse=p1 or p0,
    )


def direct_delta(data: ExperimentData, z, beta: float, adjusted: bool = False) -> float:
    """Signed studentized statistic computed from first principles.

    This path never touches the coefficient representation: it forms
    y - beta*d, takes (adjusted) mean differences and residual variances
    numerically, and so serves as an independent check on the
    rational-quadratic construction.
    """
    z = _as_float_z(z)
    u = data.y - beta * data.d
    one = z == 1.0
    n1, n0 = int(one.sum()), int((~one).sum())
    if adjusted:
        coef1, res1, _ = _arm_fit(u[one, None], data.x[one])
        coef0, res0, _ = _arm_fit(u[~one, None], data.x[~one])
        tau = float(
            (u[one].mean() - data.x[one].mean(axis=0) @ coef1[1:, 0])
            - (u[~one].mean() - data.x[~one].mean(axis=0) @ coef0[1:, 0])
        )
        sigma2 = float((res1**2).sum() / n1**2 + (res0**2).sum() / n0**2)
    else:
        pi = n1 / data.n
        tau = float(np.mean(u * (z - pi)))
        v1 = u[one] - u[one].mean()
        v0 = u[~one] - u[~one].mean()
        kappa = (pi * (1.0 - pi)) ** 2
        sigma2 = kappa * float((v1**2).sum() / n1**2 + (v0**2).sum() / n0**2)
    if sigma2 <= 0.0:
        raise ZeroVariance(f"variance estimate vanishes at beta={beta}")
    return tau / np.sqrt(sigma2)

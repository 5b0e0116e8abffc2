"""Point estimators and the large-sample IV interval used as a comparator."""

from __future__ import annotations

from dataclasses import dataclass
from math import log, sqrt

import numpy as np

from .arfunc import _arm_fit
from .data import ExperimentData
from .errors import InputError, SingularDesign, UndefinedEstimate

# A take-up contrast this close to zero (relative to the arm levels it
# differences) leaves the ratio estimator undefined.
DEFINED_RTOL = 1e-12


@dataclass(frozen=True)
class PointEstimate:
    value: float
    defined: bool
    denominator: float


def _ratio(num: float, den: float, scale: float) -> PointEstimate:
    if abs(den) <= DEFINED_RTOL * max(scale, 1.0):
        return PointEstimate(value=float("nan"), defined=False, denominator=den)
    return PointEstimate(value=num / den, defined=True, denominator=den)


def wald(data: ExperimentData) -> PointEstimate:
    """Ratio of arm mean differences: outcome over take-up."""
    one = data.z == 1.0
    num = float(data.y[one].mean() - data.y[~one].mean())
    m1 = float(data.d[one].mean())
    m0 = float(data.d[~one].mean())
    return _ratio(num, m1 - m0, max(abs(m1), abs(m0)))


def adjusted_wald(data: ExperimentData) -> PointEstimate:
    """Ratio of covariate-adjusted arm mean differences.

    With no covariates this coincides with :func:`wald`.
    """
    t_y, t_d, d_scale = _adjusted_mean_differences(data)
    return _ratio(t_y, t_d, d_scale)


def _adjusted_mean_differences(data: ExperimentData) -> tuple[float, float, float]:
    one = data.z == 1.0
    u1 = np.column_stack([data.y[one], data.d[one]])
    u0 = np.column_stack([data.y[~one], data.d[~one]])
    coef1, _, _ = _arm_fit(u1, data.x[one])
    coef0, _, _ = _arm_fit(u0, data.x[~one])
    adj1 = u1.mean(axis=0) - data.x[one].mean(axis=0) @ coef1[1:]
    adj0 = u0.mean(axis=0) - data.x[~one].mean(axis=0) @ coef0[1:]
    t_y, t_d = adj1 - adj0
    return float(t_y), float(t_d), max(abs(float(adj1[1])), abs(float(adj0[1])))


def _iv_fit(y: np.ndarray, regressors: np.ndarray, instruments: np.ndarray):
    """Just-identified IV coefficients with an HC0 sandwich variance."""
    wx = instruments.T @ regressors
    wy = instruments.T @ y
    try:
        coef = np.linalg.solve(wx, wy)
        bread = np.linalg.inv(wx)
    except np.linalg.LinAlgError as exc:
        raise SingularDesign(f"IV design is singular: {exc}") from None
    resid = y - regressors @ coef
    meat = (instruments * resid[:, None] ** 2).T @ instruments
    cov = bread @ meat @ bread.T
    return coef, cov, resid


def iv_coefficient(data: ExperimentData) -> float:
    """Take-up coefficient in the IV regression of the outcome on
    (1, take-up, arm-interacted covariates) instrumented by
    (1, assignment, arm-interacted covariates)."""
    one = np.ones(data.n)
    zx = data.z[:, None] * data.x
    cx = (1.0 - data.z)[:, None] * data.x
    regressors = np.column_stack([one, data.d, zx, cx])
    instruments = np.column_stack([one, data.z, zx, cx])
    coef, _, _ = _iv_fit(data.y, regressors, instruments)
    return float(coef[1])


def verify_iv_identity(data: ExperimentData) -> dict:
    """The covariate-adjusted ratio estimator equals the IV take-up
    coefficient; report both and their difference."""
    adj = adjusted_wald(data)
    if not adj.defined:
        raise UndefinedEstimate(
            "adjusted take-up contrast is zero; the ratio estimator and the "
            "IV coefficient are both undefined"
        )
    iv = iv_coefficient(data)
    return {
        "adjusted_wald": adj.value,
        "iv_coefficient": iv,
        "max_abs_diff": abs(adj.value - iv),
    }


@dataclass(frozen=True)
class WaldInterval:
    center: float
    halfwidth: float
    level: float

    @property
    def lo(self) -> float:
        return self.center - self.halfwidth

    @property
    def hi(self) -> float:
        return self.center + self.halfwidth

    def covers(self, value: float) -> bool:
        return self.lo <= value <= self.hi


def tsls_interval(
    data: ExperimentData, level: float = 0.95, adjusted: bool = False
) -> WaldInterval:
    """Normal-approximation interval for the take-up coefficient.

    ``adjusted=False`` uses plain covariates (1, Z, x) as instruments for
    (1, D, x); ``adjusted=True`` interacts the covariates with the arm.
    Covariate columns are included only when the data carry them.
    """
    if not 0.0 < level < 1.0:
        raise InputError(f"level must be in (0, 1), got {level}")
    one = np.ones(data.n)
    if adjusted and data.k > 0:
        zx = data.z[:, None] * data.x
        cx = (1.0 - data.z)[:, None] * data.x
        regressors = np.column_stack([one, data.d, zx, cx])
        instruments = np.column_stack([one, data.z, zx, cx])
    elif data.k > 0:
        regressors = np.column_stack([one, data.d, data.x])
        instruments = np.column_stack([one, data.z, data.x])
    else:
        regressors = np.column_stack([one, data.d])
        instruments = np.column_stack([one, data.z])
    try:
        coef, cov, _ = _iv_fit(data.y, regressors, instruments)
    except SingularDesign:
        # A vanishing take-up contrast makes the cross-moment matrix
        # singular; report that as the undefined estimator it is rather
        # than a generic collinearity failure.
        gate = adjusted_wald(data) if adjusted and data.k > 0 else wald(data)
        if not gate.defined:
            raise UndefinedEstimate(
                "take-up contrast is zero; the IV coefficient is undefined"
            ) from None
        raise
    se = sqrt(max(cov[1, 1], 0.0))
    z = normal_quantile(0.5 + level / 2.0)
    return WaldInterval(center=float(coef[1]), halfwidth=z * se, level=level)


# Rational-approximation constants for the standard normal quantile
# (absolute error far below 1e-9 over the open unit interval).
_A = (
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_B = (
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_D = (
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_F = (
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _ratpoly(r: float, num: tuple, den: tuple) -> float:
    p = num[-1]
    for c in reversed(num[:-1]):
        p = p * r + c
    q = den[-1]
    for c in reversed(den[:-1]):
        q = q * r + c
    return p / q


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF via rational approximation."""
    if not 0.0 < p < 1.0:
        raise InputError(f"probability must be in (0, 1), got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _ratpoly(r, _A, _B)
    r = p if q < 0.0 else 1.0 - p
    r = sqrt(-log(r))
    if r <= 5.0:
        val = _ratpoly(r - 1.6, _C, _D)
    else:
        val = _ratpoly(r - 5.0, _E, _F)
    return -val if q < 0.0 else val

import math

import numpy as np
import pytest
import scipy.special

from randinf import (
    ExperimentData,
    adjusted_wald,
    iv_coefficient,
    normal_quantile,
    tsls_interval,
    verify_iv_identity,
    wald,
)
from randinf.arfunc import observed_function
from randinf.errors import InputError, SingularDesign, UndefinedEstimate

from conftest import random_instance


def small_data():
    y = np.array([3.0, 4.0, 5.0, 1.0, 1.0, 1.0])
    d = np.array([1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    z = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    return ExperimentData.from_arrays(y, d, z)


class TestWald:
    def test_hand_value(self):
        est = wald(small_data())
        assert est.defined
        assert est.denominator == pytest.approx(2.0 / 3.0)
        assert est.value == pytest.approx(4.5)

    def test_undefined_when_takeup_balanced(self):
        y = np.array([3.0, 4.0, 5.0, 1.0, 1.0, 1.0])
        d = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        z = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
        est = wald(ExperimentData.from_arrays(y, d, z))
        assert not est.defined
        assert math.isnan(est.value)

    def test_wald_is_numerator_root(self):
        # The point estimate is where the squared statistic's numerator
        # vanishes, so it always lies inside the confidence set.
        rng = np.random.default_rng(11)
        for _ in range(10):
            data = random_instance(rng)
            est = wald(data)
            assert est.defined
            a, b, c = observed_function(data).num
            val = (a * est.value + b) * est.value + c
            assert abs(val) <= 1e-10 * max(abs(a), abs(b), abs(c), 1.0)

    def test_adjusted_equals_plain_without_covariates(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            data = random_instance(rng, k=0)
            a, b = wald(data), adjusted_wald(data)
            assert a.defined == b.defined
            if a.defined:
                assert b.value == pytest.approx(a.value, rel=1e-12)


class TestIvIdentity:
    @pytest.mark.parametrize("seed", range(12))
    def test_adjusted_wald_is_iv_coefficient(self, seed):
        rng = np.random.default_rng(100 + seed)
        data = random_instance(rng, k=1 + seed % 3)
        report = verify_iv_identity(data)
        assert report["max_abs_diff"] <= 1e-10 * (1 + abs(report["iv_coefficient"]))

    def test_no_covariate_case(self):
        rng = np.random.default_rng(7)
        data = random_instance(rng, k=0)
        assert iv_coefficient(data) == pytest.approx(wald(data).value, rel=1e-12)


class TestTslsInterval:
    def test_center_is_wald_without_covariates(self):
        rng = np.random.default_rng(11)
        data = random_instance(rng, k=0)
        iv = tsls_interval(data, level=0.95)
        assert iv.center == pytest.approx(wald(data).value, rel=1e-10)
        assert iv.halfwidth > 0
        assert iv.covers(iv.center)
        assert not iv.covers(iv.hi + 1e-6)

    def test_hand_rolled_sandwich(self):
        # independently coded 2x2 sandwich for the no-covariate design
        rng = np.random.default_rng(21)
        data = random_instance(rng, k=0)
        n = data.n
        W = np.column_stack([np.ones(n), data.z])
        X = np.column_stack([np.ones(n), data.d])
        A = W.T @ X
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        Ainv = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / det
        coef = Ainv @ (W.T @ data.y)
        e = data.y - X @ coef
        meat = (W * e[:, None] ** 2).T @ W
        cov = Ainv @ meat @ Ainv.T
        se = math.sqrt(cov[1, 1])
        iv = tsls_interval(data, level=0.95)
        assert iv.center == pytest.approx(coef[1], rel=1e-10)
        assert iv.halfwidth == pytest.approx(1.959963984540054 * se, rel=1e-9)

    def test_level_ordering(self):
        rng = np.random.default_rng(4)
        data = random_instance(rng, k=2)
        narrow = tsls_interval(data, level=0.80)
        wide = tsls_interval(data, level=0.99)
        assert narrow.center == pytest.approx(wide.center)
        assert narrow.halfwidth < wide.halfwidth

    def test_adjusted_variant_runs(self):
        rng = np.random.default_rng(5)
        data = random_instance(rng, k=2)
        plain = tsls_interval(data, level=0.9, adjusted=False)
        inter = tsls_interval(data, level=0.9, adjusted=True)
        assert inter.halfwidth > 0
        # interacted center must match the adjusted ratio estimator
        assert inter.center == pytest.approx(adjusted_wald(data).value, rel=1e-9)
        assert abs(plain.center - inter.center) > 0.0

    def test_level_validation(self):
        data = small_data()
        with pytest.raises(InputError):
            tsls_interval(data, level=0.0)
        with pytest.raises(InputError):
            tsls_interval(data, level=1.0)

    def test_singular_design_raises(self):
        rng = np.random.default_rng(9)
        n = 20
        z = np.zeros(n)
        z[:10] = 1.0
        d = z.copy()
        y = rng.standard_normal(n)
        x = (z - z.mean()).reshape(-1, 1)
        data = ExperimentData.from_arrays(y, d, z, x, demean=False)
        with pytest.raises(SingularDesign):
            tsls_interval(data, level=0.95)

    def test_zero_contrast_raises_undefined(self):
        # take-up varies but its arm means are equal, so the IV
        # cross-moment matrix is singular for the ratio reason
        y = np.array([3.0, 4.0, 5.0, 1.0, 2.0, 1.0])
        d = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        z = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
        data = ExperimentData.from_arrays(y, d, z)
        with pytest.raises(UndefinedEstimate):
            tsls_interval(data, level=0.95)

    def test_constant_takeup_identity_check_undefined(self):
        rng = np.random.default_rng(17)
        n = 16
        z = np.zeros(n)
        z[:8] = 1.0
        d = np.zeros(n)
        y = rng.standard_normal(n)
        x = rng.standard_normal((n, 2))
        data = ExperimentData.from_arrays(y, d, z, x)
        with pytest.raises(UndefinedEstimate):
            verify_iv_identity(data)


class TestNormalQuantile:
    def test_point_nine_seven_five(self):
        assert normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-9)

    def test_median(self):
        assert normal_quantile(0.5) == 0.0

    @pytest.mark.parametrize(
        "p", [1e-12, 1e-9, 1e-4, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1 - 1e-9]
    )
    def test_matches_reference(self, p):
        assert normal_quantile(p) == pytest.approx(
            float(scipy.special.ndtri(p)), abs=5e-9, rel=1e-9
        )

    def test_symmetry(self):
        for p in (0.01, 0.2, 0.45):
            assert normal_quantile(p) == pytest.approx(-normal_quantile(1 - p), rel=1e-12)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.3, 1.7])
    def test_domain(self, p):
        with pytest.raises(InputError):
            normal_quantile(p)

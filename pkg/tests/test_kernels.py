import numpy as np
import pytest

from randinf import draw_assignments, draw_functions, kernels
from randinf.arfunc import functions_to_arrays
from randinf._kernel_py import cross_coeffs, poly_real_roots_batch

from conftest import random_instance


def instance_arrays(seed, n=30, m=40, k=0):
    rng = np.random.default_rng(seed)
    data = random_instance(rng, n=n, k=k)
    draws = draw_assignments(data.n, data.n1, m, seed=seed + 1)
    fns = draw_functions(data, draws, adjusted=k > 0)
    return functions_to_arrays(fns)


def all_pairs(m):
    ia, ib = np.triu_indices(m, k=1)
    return ia.astype(np.int64), ib.astype(np.int64)


class TestCrossRoots:
    def test_roots_satisfy_intersection_polynomial(self, kernel_backend):
        num, den = instance_arrays(0)
        ia, ib = all_pairs(num.shape[0])
        roots, owner, identical = kernels.cross_roots_indexed(num, den, ia, ib)
        coeffs, scale = cross_coeffs(num[ia], den[ia], num[ib], den[ib])
        assert roots.size > 0
        for r, own in zip(roots, owner):
            c = coeffs[own]
            val = ((((c[4] * r + c[3]) * r + c[2]) * r + c[1]) * r) + c[0]
            bound = 1e-8 * max(np.abs(c).max(), 1e-30) * (1.0 + abs(r)) ** 4
            assert abs(val) <= bound

    def test_backends_agree(self):
        if len(kernels.available_backends()) < 2:
            pytest.skip("compiled backend unavailable")
        num, den = instance_arrays(1, m=50)
        ia, ib = all_pairs(num.shape[0])
        out = {}
        previous = kernels.active_backend()
        try:
            for name in kernels.available_backends():
                kernels.set_backend(name)
                out[name] = kernels.cross_roots_indexed(num, den, ia, ib)
        finally:
            kernels.set_backend(previous)
        r_c, o_c, id_c = out["c"]
        r_p, o_p, id_p = out["py"]
        assert np.array_equal(id_c, id_p)
        assert np.array_equal(o_c, o_p)
        assert r_c.size == r_p.size
        np.testing.assert_allclose(r_c, r_p, rtol=1e-9, atol=1e-9)

    def test_identical_rows_flagged(self, kernel_backend):
        num = np.array([[1.0, -2.0, 1.0], [2.0, -4.0, 2.0], [0.0, 0.0, 1.0]])
        den = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 2.0], [0.0, 0.0, 1.0]])
        ia = np.array([0, 0], dtype=np.int64)
        ib = np.array([1, 2], dtype=np.int64)
        roots, owner, identical = kernels.cross_roots_indexed(num, den, ia, ib)
        assert identical.tolist() == [True, False]
        assert np.all(owner == 1)

    def test_double_root_deduplicated(self, kernel_backend):
        # f = (b-1)^2, g = 0: cross polynomial has a double root at 1.
        num = np.array([[1.0, -2.0, 1.0], [0.0, 0.0, 0.0]])
        den = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
        ia = np.array([0], dtype=np.int64)
        ib = np.array([1], dtype=np.int64)
        roots, owner, identical = kernels.cross_roots_indexed(num, den, ia, ib)
        assert not identical[0]
        assert roots.size == 1
        assert roots[0] == pytest.approx(1.0, abs=1e-9)

    def test_sorted_within_pair(self, kernel_backend):
        num, den = instance_arrays(2, m=30)
        ia, ib = all_pairs(num.shape[0])
        roots, owner, _ = kernels.cross_roots_indexed(num, den, ia, ib)
        for own in np.unique(owner):
            rs = roots[owner == own]
            assert np.all(np.diff(rs) > 0)


class TestPolyRealRootsBatch:
    def test_mixed_degrees(self):
        coeffs = np.array(
            [
                [-6.0, 2.0, 0.0, 0.0, 0.0],  # root 3
                [2.0, -3.0, 1.0, 0.0, 0.0],  # roots 1, 2
                [0.0, -1.0, 0.0, 1.0, 0.0],  # roots -1, 0, 1
                [4.0, 0.0, -5.0, 0.0, 1.0],  # roots -2,-1,1,2
                [5.0, 0.0, 0.0, 0.0, 0.0],  # no roots
            ]
        )
        roots, owner = poly_real_roots_batch(coeffs)
        got = {
            own: sorted(roots[owner == own].tolist()) for own in np.unique(owner)
        }
        np.testing.assert_allclose(got[0], [3.0], atol=1e-9)
        np.testing.assert_allclose(got[1], [1.0, 2.0], atol=1e-9)
        np.testing.assert_allclose(got[2], [-1.0, 0.0, 1.0], atol=1e-8)
        np.testing.assert_allclose(got[3], [-2.0, -1.0, 1.0, 2.0], atol=1e-8)
        assert 4 not in got

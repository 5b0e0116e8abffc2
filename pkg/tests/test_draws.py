from itertools import combinations
from math import comb

import numpy as np
import pytest

from randinf.draws import DrawSet, draw_assignments, enumerate_assignments
from randinf.errors import DegenerateDesign, InputError, TooManyAssignments


class TestDrawAssignments:
    def test_shape_and_row_sums(self):
        ds = draw_assignments(12, 5, 40, seed=1)
        assert ds.draws.shape == (40, 12)
        assert np.all(ds.draws.sum(axis=1) == 5)
        assert ds.seed == 1
        assert ds.n1 == 5

    def test_deterministic_given_seed(self):
        a = draw_assignments(15, 7, 30, seed=99)
        b = draw_assignments(15, 7, 30, seed=99)
        assert np.array_equal(a.draws, b.draws)
        c = draw_assignments(15, 7, 30, seed=100)
        assert not np.array_equal(a.draws, c.draws)

    def test_uniform_over_patterns(self):
        m = 60000
        ds = draw_assignments(4, 2, m, seed=7)
        codes = ds.draws @ np.array([8, 4, 2, 1])
        _, counts = np.unique(codes, return_counts=True)
        assert counts.size == 6
        assert np.abs(counts / m - 1 / 6).max() < 0.02

    def test_marginal_inclusion_probability(self):
        m = 50000
        ds = draw_assignments(10, 3, m, seed=11)
        freq = ds.draws.mean(axis=0)
        assert np.abs(freq - 0.3).max() < 0.01

    def test_design_bounds_enforced(self):
        with pytest.raises(DegenerateDesign):
            draw_assignments(6, 1, 5, seed=0)
        with pytest.raises(DegenerateDesign):
            draw_assignments(6, 5, 5, seed=0)
        with pytest.raises(InputError):
            draw_assignments(6, 3, 0, seed=0)


class TestEnumerateAssignments:
    def test_count_and_uniqueness(self):
        ds = enumerate_assignments(8, 3)
        assert ds.m == comb(8, 3)
        assert len({tuple(r) for r in ds.draws}) == ds.m
        assert np.all(ds.draws.sum(axis=1) == 3)
        assert ds.seed is None

    def test_lexicographic_vector_order(self):
        ds = enumerate_assignments(6, 2)
        rows = ["".join(map(str, r)) for r in ds.draws]
        assert rows == sorted(rows)

    def test_matches_brute_force_set(self):
        ds = enumerate_assignments(7, 3)
        expected = set()
        for pos in combinations(range(7), 3):
            vec = [0] * 7
            for p in pos:
                vec[p] = 1
            expected.add(tuple(vec))
        assert {tuple(int(v) for v in r) for r in ds.draws} == expected

    def test_relabeling_preserves_the_set(self):
        ds = enumerate_assignments(6, 3)
        perm = np.array([3, 1, 5, 0, 2, 4])
        relabeled = {tuple(r[perm]) for r in ds.draws}
        original = {tuple(r) for r in ds.draws}
        assert relabeled == original

    def test_cap_enforced(self):
        with pytest.raises(TooManyAssignments):
            enumerate_assignments(40, 20)
        with pytest.raises(TooManyAssignments):
            enumerate_assignments(10, 5, cap=comb(10, 5) - 1)
        assert enumerate_assignments(10, 5, cap=comb(10, 5)).m == comb(10, 5)


class TestDrawSet:
    def test_row_sum_validation(self):
        bad = np.array([[1, 1, 0], [1, 0, 0]], dtype=np.uint8)
        with pytest.raises(InputError):
            DrawSet(draws=bad, n1=2)

    def test_with_observed_appends(self):
        ds = draw_assignments(8, 4, 5, seed=3)
        z = np.array([1, 1, 1, 1, 0, 0, 0, 0])
        ext = ds.with_observed(z)
        assert ext.m == 6
        assert np.array_equal(ext.draws[-1], z)

    def test_text_round_trip(self):
        ds = draw_assignments(9, 4, 7, seed=13)
        back = DrawSet.from_text(ds.to_text())
        assert np.array_equal(back.draws, ds.draws)
        assert back.seed == ds.seed
        assert back.n1 == ds.n1

    def test_text_round_trip_enumerated(self):
        ds = enumerate_assignments(5, 2)
        back = DrawSet.from_text(ds.to_text())
        assert np.array_equal(back.draws, ds.draws)
        assert back.seed is None

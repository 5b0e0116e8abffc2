import numpy as np
import pytest

import randinf
from randinf import (
    ExperimentData,
    build_cs_baseline,
    build_cs_fast,
    build_cs_grid,
    build_envelope,
    confidence_set,
    draw_assignments,
    draw_functions,
    envelope_from_functions,
    index_set,
    index_set_values,
    quantile_value,
)
from randinf.csbuild import quantile_index
from randinf.errors import InputError

from conftest import random_instance


class TestQuantile:
    def test_plain_order_statistic(self):
        assert quantile_value(np.array([1.0, 2.0, 3.0, 4.0]), 0.25) == 3.0

    def test_all_ties(self):
        assert quantile_value(np.array([5.0, 5.0, 5.0]), 0.5) == 5.0

    def test_decile(self):
        vals = np.arange(0.1, 1.05, 0.1)
        assert quantile_value(vals, 0.1) == pytest.approx(0.9)

    def test_alpha_near_zero_gives_max(self):
        vals = np.array([3.0, 1.0, 7.0, 2.0])
        m = vals.size
        assert quantile_value(vals, 1.0 / (2 * m)) == 7.0

    def test_count_fuzz_protects_exact_products(self):
        # m*(1-alpha) = 36.0 exactly; the index must be 36, not 37.
        assert quantile_index(40, 0.1) == 36

    def test_matches_brute_force_definition(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            m = int(rng.integers(1, 40))
            vals = np.round(rng.uniform(0, 4, size=m), 1)
            alpha = float(rng.uniform(0.01, 0.6))
            q = quantile_value(vals, alpha)
            assert q in vals
            assert np.mean(vals <= q) >= 1 - alpha
            below = vals[vals < q]
            if below.size:
                assert np.mean(vals <= below.max()) < 1 - alpha - 1e-12

    def test_index_set_ties(self):
        vals = np.array([2.0, 2.0, 1.0, 3.0])
        assert index_set_values(vals, 0.25).tolist() == [0, 1]

    def test_index_set_from_functions(self):
        data, draws, alpha = build_instance(8, m=30)
        fns = draw_functions(data, draws)
        env = envelope_from_functions(fns, alpha)
        for beta in (-1.5, 0.0, 2.0):
            got = index_set(beta, fns, alpha)
            assert got.size >= 1
            assert got.tolist() == env.index_set_at(beta).tolist()


def build_instance(seed, n=None, m=120, k=0, alpha=0.1):
    rng = np.random.default_rng(seed)
    data = random_instance(rng, n=n, k=k)
    draws = draw_assignments(data.n, data.n1, m, seed=seed * 7 + 1)
    return data, draws, alpha


class TestEnvelope:
    def test_realizing_index_constant_between_intersections(self):
        data, draws, alpha = build_instance(3, m=40)
        fns = draw_functions(data, draws)
        env = envelope_from_functions(fns, alpha)
        grid = env.intersections
        assert np.all(np.diff(grid) > 0)
        if grid.size == 0:
            return
        # probe a few interior segments at several points each
        rng = np.random.default_rng(0)
        edges = np.concatenate([[grid[0] - 2.0], grid, [grid[-1] + 2.0]])
        for s in range(min(10, edges.size - 1)):
            lo, hi = edges[s], edges[s + 1]
            if hi - lo < 1e-4:
                continue
            pts = rng.uniform(lo + 1e-6, hi - 1e-6, size=3)
            vals = {env.realizing_index_at(float(p)) for p in pts}
            # the attaining set may have ties, but the quantile value curve
            # must agree with each candidate on the whole segment
            assert len({round(env.quantile_at(float(p)), 9) for p in pts}) >= 1
            f = env.functions[vals.pop()]
            for p in pts:
                assert f(float(p)) == pytest.approx(
                    env.quantile_at(float(p)), rel=1e-9, abs=1e-12
                )

    def test_alpha_validation(self):
        data, draws, _ = build_instance(4, m=10)
        with pytest.raises(InputError):
            build_envelope(draws, data, False, 0.0)
        with pytest.raises(InputError):
            build_envelope(draws, data, False, 1.0)

    def test_build_envelope_matches_function_path(self):
        data, draws, alpha = build_instance(5, m=25)
        env = build_envelope(draws, data, False, alpha)
        direct = envelope_from_functions(draw_functions(data, draws), alpha)
        assert np.allclose(env.intersections, direct.intersections)
        assert env.num_pairs == direct.num_pairs


class TestAlgorithmsAgree:
    @pytest.mark.parametrize("seed", range(6))
    def test_baseline_equals_fast(self, seed):
        k = (0, 0, 2, 3, 0, 2)[seed]
        data, draws, alpha = build_instance(seed + 10, m=100, k=k)
        adjusted = k > 0
        base = build_cs_baseline(data, draws, alpha, adjusted=adjusted)
        fast = build_cs_fast(data, draws, alpha, adjusted=adjusted)
        assert base.intervals.count == fast.intervals.count
        for (alo, ahi), (blo, bhi) in zip(
            base.intervals.intervals, fast.intervals.intervals
        ):
            assert alo == pytest.approx(blo, rel=1e-8, abs=1e-8)
            assert ahi == pytest.approx(bhi, rel=1e-8, abs=1e-8)

    def test_fast_visits_fewer_segments(self):
        data, draws, alpha = build_instance(30, m=150)
        base = build_cs_baseline(data, draws, alpha)
        fast = build_cs_fast(data, draws, alpha)
        assert fast.stats["num_segments"] < base.stats["num_segments"]
        assert base.stats["num_segments"] == base.stats["num_intersections"] + 1


class TestGridAgreement:
    def test_membership_matches_closed_form(self):
        data, draws, alpha = build_instance(21, m=80)
        base = build_cs_baseline(data, draws, alpha)
        w = base.wald
        grid = np.linspace(w - 8, w + 8, 801)
        g = build_cs_grid(data, draws, alpha, betas=grid)
        for beta, member in zip(g.betas, g.member):
            near = any(
                np.isfinite(e) and abs(beta - e) <= 1e-6
                for iv in base.intervals.intervals
                for e in iv
            )
            if near:
                continue
            assert member == base.intervals.contains(float(beta))

    def test_range_form_and_iteration(self):
        data, draws, alpha = build_instance(22, m=30)
        g = build_cs_grid(data, draws, alpha, lo=-2.0, hi=2.0, step=0.5)
        pairs = list(g)
        assert [b for b, _ in pairs] == pytest.approx(
            np.arange(-2.0, 2.25, 0.5).tolist()
        )
        assert all(isinstance(mem, bool) for _, mem in pairs)
        with pytest.raises(InputError):
            build_cs_grid(data, draws, alpha)
        with pytest.raises(InputError):
            build_cs_grid(data, draws, alpha, lo=1.0, hi=-1.0, step=0.5)
        with pytest.raises(InputError):
            build_cs_grid(data, draws, alpha, lo=-1.0, hi=1.0, step=0.0)


class TestEdgeCases:
    def test_single_draw(self):
        data, draws, _ = build_instance(5, m=1)
        res = build_cs_fast(data, draws, 0.25)
        assert res.m == 1
        # identical singleton: observed vs itself would be the whole line
        obs_in_draws = np.array_equal(draws.draws[0], data.z.astype(np.uint8))
        if obs_in_draws:
            assert res.intervals.intervals == ((-np.inf, np.inf),)

    def test_observed_included_whole_line_when_m1(self):
        data, _, _ = build_instance(6, m=1)
        ds = randinf.DrawSet(
            draws=data.z.astype(np.uint8).reshape(1, -1), n1=data.n1
        )
        res = build_cs_fast(data, ds, 0.25)
        assert res.intervals.intervals == ((-np.inf, np.inf),)

    def test_include_observed_keeps_wald_inside(self):
        data, draws, alpha = build_instance(7, m=60)
        ds = draws.with_observed(data.z)
        res = build_cs_fast(data, ds, alpha)
        assert res.wald is not None
        assert res.intervals.contains(res.wald, slack=1e-9)

    def test_wald_membership(self):
        for seed in range(8):
            data, draws, alpha = build_instance(seed + 40, m=90)
            res = build_cs_fast(data, draws, alpha)
            if res.wald is not None:
                assert res.intervals.contains(res.wald, slack=1e-9)

    def test_alpha_monotonicity(self):
        data, draws, _ = build_instance(8, m=100)
        wide = build_cs_fast(data, draws, 0.05)
        narrow = build_cs_fast(data, draws, 0.30)
        assert narrow.intervals.subset_of(wide.intervals, slack=1e-8)

    def test_mismatched_draws_rejected(self):
        data, _, _ = build_instance(9, m=10)
        other = draw_assignments(data.n + 2, data.n1, 10, seed=1)
        with pytest.raises(InputError):
            build_cs_fast(data, other, 0.1)

    def test_weak_instrument_unbounded(self):
        rng = np.random.default_rng(55)
        n = 30
        z = np.zeros(n)
        z[rng.permutation(n)[:15]] = 1.0
        strata = np.zeros(n)
        strata[:2] = 1.0
        d = np.where((strata == 1.0) & (z == 1.0), 1.0, 0.0)
        y = rng.standard_normal(n)
        data = ExperimentData.from_arrays(y, d, z)
        draws = draw_assignments(n, 15, 80, seed=2)
        res = build_cs_fast(data, draws, 0.05)
        assert not res.intervals.is_bounded()


class TestResultPayload:
    def test_jsonable_structure(self):
        data, draws, alpha = build_instance(11, m=50)
        res = confidence_set(data, draws, alpha, algorithm="fast")
        payload = res.to_jsonable()
        assert payload["algorithm"] == "fast"
        assert payload["m"] == 50
        assert {"num_pairs", "num_intersections", "num_segments", "wall_time"} <= set(
            payload["stats"]
        )
        import json

        text = json.dumps(payload)
        assert "Infinity" not in text

    def test_grid_dispatch(self):
        data, draws, alpha = build_instance(12, m=40)
        res = confidence_set(
            data,
            draws,
            alpha,
            algorithm="grid",
            grid_betas=np.linspace(-10, 10, 501),
        )
        assert res.algorithm == "grid"
        assert res.intervals.count >= 1
        with pytest.raises(InputError):
            confidence_set(data, draws, alpha, algorithm="grid")

    def test_unknown_algorithm(self):
        data, draws, alpha = build_instance(13, m=10)
        with pytest.raises(InputError):
            confidence_set(data, draws, alpha, algorithm="newton")

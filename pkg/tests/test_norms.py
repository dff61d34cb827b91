import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timefreq import Grid, SampledFunction
from timefreq.dyadic import DyadicInterval, Interval, Tile
from timefreq.norms import (
    adapted_family,
    interval_weight,
    make_adapted_bump,
    maximal_multiplier_lower,
    tile_size,
    variational_norm,
    variational_norm_field,
)
from timefreq.wavepackets import build_window, tile_packet


def oracle_variation(seq, r):
    """Exhaustive maximum over all increasing index subsequences."""
    seq = list(seq)
    n = len(seq)
    best = 0.0
    for size in range(2, n + 1):
        for idx in itertools.combinations(range(n), size):
            tot = sum(abs(seq[b] - seq[a]) ** r for a, b in zip(idx, idx[1:]))
            best = max(best, tot)
    sup = max(abs(v) for v in seq)
    return sup + best ** (1.0 / r) if best > 0 else sup


class TestVariationalNorm:
    def test_constant_sequence(self):
        res = variational_norm([3.0, 3.0, 3.0], 2.0)
        assert res.value == 3.0 and res.variation_part == 0.0
        assert len(res.best_subsequence) == 1

    def test_single_jump(self):
        for r in (1.0, 2.0, 3.0, 7.5):
            assert variational_norm([0.0, 1.0], r).value == pytest.approx(2.0)

    def test_up_down(self):
        res = variational_norm([0.0, 1.0, 0.0], 2.0)
        assert res.value == pytest.approx(1.0 + math.sqrt(2.0), abs=1e-12)
        assert res.best_subsequence == (0, 1, 2)

    def test_rejects_r_below_one(self):
        with pytest.raises(ValueError):
            variational_norm([1.0, 2.0], 0.9)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_exhaustive_small(self, n):
        for seq in itertools.product((-1, 0, 1), repeat=n):
            got = variational_norm(np.array(seq, dtype=float), 3.0).value
            assert got == pytest.approx(oracle_variation(seq, 3.0), abs=1e-12)

    @given(st.lists(st.floats(min_value=-5, max_value=5), min_size=1, max_size=8),
           st.sampled_from([1.5, 2.0, 3.0]))
    @settings(max_examples=150, deadline=None)
    def test_matches_oracle_random(self, seq, r):
        got = variational_norm(seq, r).value
        assert got == pytest.approx(oracle_variation(seq, r), abs=1e-10)

    @given(st.lists(st.floats(min_value=-3, max_value=3), min_size=2, max_size=10))
    @settings(max_examples=100, deadline=None)
    def test_monotone_in_r_and_dominates_sup(self, seq):
        v2 = variational_norm(seq, 2.0).value
        v3 = variational_norm(seq, 3.0).value
        v5 = variational_norm(seq, 5.0).value
        assert v2 >= v3 - 1e-12 >= v5 - 2e-12
        assert v3 >= max(abs(v) for v in seq) - 1e-12

    def test_subadditive(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            a = rng.standard_normal(9)
            b = rng.standard_normal(9)
            va = variational_norm(a, 3.0).value
            vb = variational_norm(b, 3.0).value
            assert variational_norm(a + b, 3.0).value <= va + vb + 1e-10

    def test_field_matches_scalar(self):
        rng = np.random.default_rng(9)
        vals = rng.standard_normal((6, 40)) + 1j * rng.standard_normal((6, 40))
        field = variational_norm_field(vals, 3.0)
        for i in (0, 7, 39):
            assert field[i] == pytest.approx(variational_norm(vals[:, i], 3.0).value, abs=1e-12)


class TestIntervalWeight:
    def test_center_and_one_length(self):
        iv = Interval(2.0, 4.0)
        assert interval_weight(iv, 3.0) == pytest.approx(1.0)
        assert interval_weight(iv, 5.0) == pytest.approx(0.5)  # distance == length

    def test_monotone(self):
        iv = Interval(0.0, 1.0)
        xs = np.linspace(0.5, 10.0, 50)
        w = interval_weight(iv, xs, power=4.0)
        assert np.all(np.diff(w) <= 1e-15)

    def test_periodic_distance(self):
        iv = Interval(0.0, 1.0)  # center 0.5
        near_wrap = float(interval_weight(iv, 15.6, period=16.0))
        assert near_wrap == pytest.approx(1.0 / (1.0 + 0.9), rel=1e-12)
        plain = float(interval_weight(iv, 15.6))
        assert plain == pytest.approx(1.0 / (1.0 + 15.1), rel=1e-12)


class TestAdaptedBump:
    def test_support_exact(self):
        g = Grid(10, 16.0)
        bump = make_adapted_bump(Interval(1.0, 3.0), 1.0, 0)
        vals = bump.samples(g)
        xi = g.freqs()
        assert np.all(vals[(xi <= 1.0) | (xi >= 3.0)] == 0.0)

    @pytest.mark.parametrize("variant", range(8))
    def test_derivative_bound(self, variant):
        iv = Interval(0.0, 2.0)
        bump = make_adapted_bump(iv, 1.0, variant)
        t = np.linspace(-0.5, 2.5, 20001)
        vals = bump(t)
        assert np.max(np.abs(vals)) <= 1.0 + 1e-12
        deriv = np.abs(np.diff(vals)) / (t[1] - t[0])
        assert np.max(deriv) <= 1.0 / iv.length + 0.05

    def test_dilation_covariance(self):
        small = make_adapted_bump(Interval(0.0, 1.0), 1.0, 1)
        big = make_adapted_bump(Interval(-0.5, 1.5), 1.0, 1)
        ts = np.linspace(0.0, 1.0, 257)
        assert np.allclose(small(ts), big(-0.5 + 2.0 * ts), atol=0)

    def test_tiny_constant_rejected(self):
        with pytest.raises(ValueError):
            make_adapted_bump(Interval(0.0, 1.0), 1e-9, 0)


class TestMaximalMultiplierLower:
    def test_identity_family(self):
        g = Grid(8, 8.0)
        val = maximal_multiplier_lower([np.ones(g.n, dtype=complex)], g, 1.5, 20, 0)
        assert val >= 1.0 - 1e-6

    def test_zero_family(self):
        g = Grid(8, 8.0)
        assert maximal_multiplier_lower([np.zeros(g.n, dtype=complex)], g, 1.5) == 0.0

    def test_deterministic(self):
        g = Grid(7, 8.0)
        rng = np.random.default_rng(2)
        fam = [rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n) for _ in range(3)]
        a = maximal_multiplier_lower(fam, g, 1.3, 30, seed=5)
        b = maximal_multiplier_lower(fam, g, 1.3, 30, seed=5)
        assert a == b

    def test_budget_monotone_oracle(self):
        # the larger-budget run with the same seed explores a superset of
        # candidates, so it dominates and serves as the net oracle
        g = Grid(6, 8.0)
        bump = make_adapted_bump(Interval(0.0, 2.0), 1.0, 0)
        fam = [bump.samples(g)]
        small = maximal_multiplier_lower(fam, g, 1.5, search_budget=40, seed=0)
        oracle = maximal_multiplier_lower(fam, g, 1.5, search_budget=400, seed=0)
        assert small <= oracle + 1e-12
        assert small >= 0.95 * oracle


@pytest.fixture(scope="module")
def size_setup():
    g = Grid(9, 8.0)
    w = build_window(g, min_freq_samples=8)
    return g, w


class TestTileSize:
    def test_zero_function(self, size_setup):
        g, _ = size_setup
        tiles = [Tile(DyadicInterval(0, 2), DyadicInterval(0, 1))]
        assert tile_size(tiles, SampledFunction.zero(g)) == 0.0

    def test_monotone_under_inclusion(self, size_setup):
        g, _ = size_setup
        rng = np.random.default_rng(17)
        f = SampledFunction(g, rng.standard_normal(g.n))
        tiles = [Tile(DyadicInterval(0, mt), DyadicInterval(0, mf))
                 for mt in range(4) for mf in range(3)]
        full = tile_size(tiles, f, 6)
        part = tile_size(tiles[:5], f, 6)
        assert part <= full + 1e-15

    def test_size_bound_by_maximal_function(self, size_setup):
        # collection size is controlled by sup over tiles of inf over I_s of M 1_F
        from timefreq import hl_maximal

        g, _ = size_setup
        rng = np.random.default_rng(7)
        tiles = [Tile(DyadicInterval(k, mt), DyadicInterval(-k, mf))
                 for k in (-1, 0, 1)
                 for mt in range(int(8 * 2.0**-k))
                 for mf in range(int(8 * 2.0**k))]
        ratios = []
        for _ in range(20):
            ivs = []
            for _ in range(int(rng.integers(1, 4))):
                a = rng.uniform(0.0, 7.0)
                ivs.append((a, min(a + rng.uniform(0.2, 1.0), 8.0)))
            F = SampledFunction.indicator(g, ivs)
            sub = [s for s in tiles if rng.random() < 0.3]
            if not sub:
                continue
            m_vals = hl_maximal(F).values.real
            sup_inf = 0.0
            for s in sub:
                lo, hi = g.index_range(s.time.left, s.time.right)
                sup_inf = max(sup_inf, m_vals[lo:hi].min())
            ratios.append(tile_size(sub, F, 6) / sup_inf)
        # single fitted constant across instances
        assert max(ratios) <= 0.12

    def test_own_packet_scale(self, size_setup):
        # two-path check: the estimator value against a direct quadrature of
        # the same best-bump integrand
        from timefreq.grid import dft, lp_norm_values
        from timefreq.norms import adapted_family

        g, w = size_setup
        s = Tile(DyadicInterval(0, 3), DyadicInterval(0, 2))
        f = tile_packet(w, s)
        got = tile_size([s], f, 8)
        omega10 = s.freq.to_interval().dilate(10.0)
        omega10 = Interval(max(omega10.a, -g.freq_halfwidth), min(omega10.b, g.freq_halfwidth))
        weight = interval_weight(s.time.to_interval(), g.xs(), 10.0, period=g.length)
        fhat = dft(f).values
        best = 0.0
        for bump in adapted_family(omega10, 1.0, 8):
            mvals = bump.samples(g)
            tv = np.array([np.sum(mvals * fhat * np.exp(2j * np.pi * g.freqs() * x)) * g.dxi
                           for x in g.xs()[::8]])
            wgt = weight[::8]
            direct = lp_norm_values(wgt * tv, g.dx * 8, 2) / math.sqrt(s.time.length)
            best = max(best, direct)
        assert got >= 0.5 * best

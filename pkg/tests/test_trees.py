import math

import numpy as np
import pytest

from timefreq import Grid, SampledFunction
from timefreq.dyadic import DyadicInterval, Interval, Tile, TileUniverse, Tree, is_convex
from timefreq.norms import interval_weight, tile_size
from timefreq.trees import (
    ZERO_SIZE_LEVEL,
    select_forests,
    tree_coefficients,
    tree_decompose,
    tree_variation_report,
)
from timefreq.wavepackets import build_kernel, build_window, model_function, tile_packet


@pytest.fixture(scope="module")
def setup9():
    g = Grid(9, 8.0)
    return g, build_window(g, min_freq_samples=8), build_kernel(g)


@pytest.fixture(scope="module")
def setup11():
    g = Grid(11, 32.0)
    return g, build_window(g, min_freq_samples=32), build_kernel(g)


@pytest.fixture(scope="module")
def universe9():
    return TileUniverse(-1, 1, Interval(0.0, 8.0), Interval(0.0, 8.0))


def left_aligned_tree(mt, sub_offset=0):
    """Three-scale tree whose member frequencies share the left endpoint 4."""
    tiles = [
        Tile(DyadicInterval(0, mt), DyadicInterval(0, 4)),
        Tile(DyadicInterval(-1, 2 * mt), DyadicInterval(1, 2)),
        Tile(DyadicInterval(-1, 2 * mt + 1), DyadicInterval(1, 2)),
        Tile(DyadicInterval(-2, 4 * mt + sub_offset), DyadicInterval(2, 1)),
    ]
    return Tree.with_top_tile(tiles[0], tiles, top_freq=4.0)


class TestSelectForests:
    def test_partition_and_certificates(self, setup9, universe9):
        g, w, _ = setup9
        tiles = universe9.all_tiles()
        f = SampledFunction.indicator(g, [(1.0, 1.5), (4.0, 5.0)])
        dec = select_forests(tiles, f, family_size=6)
        assert dec.all_tiles() == set(tiles)
        assert sum(len(forest.tiles()) for forest in dec.levels) == len(tiles)
        for forest in dec.levels:
            level_size = tile_size(forest.tiles(), f, 6)
            assert level_size <= math.ldexp(1.0, -forest.level) + 1e-15

    def test_levels_convex_and_disjoint_trees(self, setup9, universe9):
        g, w, _ = setup9
        rng = np.random.default_rng(23)
        f = SampledFunction(g, rng.standard_normal(g.n))
        dec = select_forests(universe9.all_tiles(), f, family_size=6)
        for forest in dec.levels:
            assert is_convex(forest.tiles(), universe9)
            seen = set()
            for tree in forest.trees:
                assert not (seen & tree.tiles)
                seen |= tree.tiles

    def test_zero_function_single_level(self, setup9, universe9):
        g, _, _ = setup9
        dec = select_forests(universe9.all_tiles(), SampledFunction.zero(g), family_size=4)
        assert len(dec.levels) == 1
        assert dec.levels[0].level == ZERO_SIZE_LEVEL
        assert dec.levels[0].tiles() == set(universe9.all_tiles())

    def test_packet_input_selects_its_tile_first(self, setup9, universe9):
        g, w, _ = setup9
        s0 = Tile(DyadicInterval(0, 3), DyadicInterval(0, 2))
        f = tile_packet(w, s0)
        dec = select_forests(universe9.all_tiles(), f, family_size=6)
        first = dec.levels[0]
        assert any(s0 in tree.tiles for tree in first.trees)
        single = tile_size([s0], f, 6)
        assert abs(first.level - math.ceil(-math.log2(single))) <= 2

    def test_non_convex_rejected(self, setup9):
        g, _, _ = setup9
        bad = [Tile(DyadicInterval(0, 0), DyadicInterval(0, 0)),
               Tile(DyadicInterval(2, 0), DyadicInterval(-2, 0))]
        with pytest.raises(ValueError):
            select_forests(bad, SampledFunction.zero(g))

    def test_counting_data_recorded(self, setup9, universe9):
        g, _, _ = setup9
        rng = np.random.default_rng(31)
        f = SampledFunction(g, rng.standard_normal(g.n))
        dec = select_forests(universe9.all_tiles(), f, family_size=6)
        rows = dec.summary_rows()
        assert all(row[3] > 0 for row in rows)
        assert dec.to_text().count("\n") == len(universe9.all_tiles())


class TestTreeDecompose:
    def test_pieces_sum_to_model(self, setup11):
        g, w, ker = setup11
        tree = left_aligned_tree(mt=14)
        for s in tree.tiles:
            mf = model_function(w, ker, s)
            sup = mf.theta_support
            for level in (0, 1, 2, 3):
                pieces = tree_decompose(s, tree, level, w, ker, model=mf)
                for frac in (0.25, 0.7):
                    theta = sup.a + frac * sup.length
                    phi = mf.x_slice(theta)
                    total = pieces.local_slice(theta, phi) + pieces.tail_slice(theta, phi)
                    assert np.max(np.abs(total - phi)) <= 1e-12 * max(1.0, np.max(np.abs(phi)))

    def test_level_zero_is_whole_model(self, setup11):
        g, w, ker = setup11
        tree = left_aligned_tree(mt=14)
        s = next(iter(tree.tiles))
        pieces = tree_decompose(s, tree, 0, w, ker)
        phi = pieces.model.x_slice(tree.top_freq)
        assert np.array_equal(pieces.tail_slice(tree.top_freq, phi), phi)
        assert np.max(np.abs(pieces.local_slice(tree.top_freq, phi))) == 0.0

    def test_local_piece_support(self, setup11):
        g, w, ker = setup11
        tree = left_aligned_tree(mt=14)
        s = tree.top_tile
        for level in (1, 2, 3):
            pieces = tree_decompose(s, tree, level, w, ker)
            loc = pieces.local_slice(tree.top_freq)
            dist = g.wrapped_dist(g.xs(), s.time.center)
            outside = dist > math.ldexp(s.time.length, level - 1) + g.dx
            assert np.max(np.abs(loc[outside])) == 0.0

    @pytest.mark.parametrize("mt,sub", [(3, 0), (7, 2), (14, 2), (22, 1), (27, 3)])
    def test_mean_zero_random_trees(self, setup11, mt, sub):
        g, w, ker = setup11
        tree = left_aligned_tree(mt=mt, sub_offset=sub)
        osc = np.exp(-2j * np.pi * tree.top_freq * g.xs())
        for s in tree.tiles:
            mf = model_function(w, ker, s)
            sup = mf.theta_support
            for level in (1, 2, 3):
                pieces = tree_decompose(s, tree, level, w, ker, model=mf)
                for frac in (0.3, 0.6):
                    theta = sup.a + frac * sup.length
                    tail = pieces.tail_slice(theta)
                    mean = abs(np.sum(tail * osc) * g.dx)
                    l1 = np.sum(np.abs(tail)) * g.dx
                    assert mean <= 1e-8 * l1

    def test_decay_gain(self, setup11):
        g, w, ker = setup11
        tree = left_aligned_tree(mt=14)
        for s in [tree.top_tile, next(t for t in tree.tiles if t.scale == -1)]:
            weight = interval_weight(s.time.to_interval(), g.xs(), 4.0, period=g.length)
            envs = []
            for level in range(1, 5):
                pieces = tree_decompose(s, tree, level, w, ker)
                tail = pieces.tail_slice(tree.top_freq)
                envs.append(np.max(np.abs(tail) * weight) * math.sqrt(s.time.length))
            slope = np.polyfit(range(1, 5), np.log2(envs), 1)[0]
            assert slope <= -3.5

    def test_theta_derivative_bound(self, setup11):
        # finite-difference check of the theta-derivative envelope of the tail
        g, w, ker = setup11
        tree = left_aligned_tree(mt=14)
        s = tree.top_tile
        mf = model_function(w, ker, s)
        h = g.dxi / 4.0
        theta0 = tree.top_freq + 0.3
        pieces = tree_decompose(s, tree, 1, w, ker, model=mf)
        d_tail = (pieces.tail_slice(theta0 + h) - pieces.tail_slice(theta0 - h)) / (2 * h)
        weight = interval_weight(s.time.to_interval(), g.xs(), 4.0, period=g.length)
        env = np.max(np.abs(d_tail) * weight) / math.sqrt(s.time.length)
        assert env <= 50.0  # fitted once; scales with |I_s|^(1/2) per the envelope form


class TestTreeVariationReport:
    def test_zero_function(self, setup9):
        g, w, ker = setup9
        tree = left_aligned_tree(mt=3)
        rep = tree_variation_report(tree, SampledFunction.zero(g), 1, 3.0, 2.0, w, ker, family_size=4)
        assert rep.lhs == 0.0

    def test_single_tile_two_paths(self, setup9):
        g, w, ker = setup9
        s = Tile(DyadicInterval(0, 3), DyadicInterval(0, 4))
        tree = Tree.with_top_tile(s, [s], top_freq=4.0)
        f = SampledFunction.indicator(g, [(2.75, 4.0)])
        rep = tree_variation_report(tree, f, 0, 3.0, 2.0, w, ker)
        coeffs = tree_coefficients(tree, f, w)
        field = coeffs[s] * model_function(w, ker, s).x_slice(4.0)
        # one-term scale sequence: variation norm equals the absolute value
        direct = (np.sum(np.abs(field) ** 2) * g.dx) ** 0.5
        assert abs(rep.lhs - direct) <= 1e-10 * max(direct, 1.0)

    def test_ratio_bounded_across_levels(self, setup9):
        g, w, ker = setup9
        rng = np.random.default_rng(13)
        ratios = []
        for _ in range(10):
            mt = int(rng.integers(1, 6))
            tree = left_aligned_tree(mt=mt, sub_offset=int(rng.integers(0, 4)))
            a = mt + rng.uniform(-0.5, 0.5)
            f = SampledFunction.indicator(g, [(max(a, 0.0), min(a + rng.uniform(0.3, 1.5), 8.0))])
            for level in (0, 1, 2):
                rep = tree_variation_report(tree, f, level, 3.0, 2.0, w, ker, family_size=6)
                if rep.rhs_scale > 0:
                    ratios.append(rep.ratio)
        assert max(ratios) <= 150.0  # single fitted constant

    def test_parameter_validation(self, setup9):
        g, w, ker = setup9
        tree = left_aligned_tree(mt=3)
        f = SampledFunction.zero(g)
        with pytest.raises(ValueError):
            tree_variation_report(tree, f, 0, 2.0, 2.0, w, ker)
        with pytest.raises(ValueError):
            tree_variation_report(tree, f, 0, 3.0, 1.0, w, ker)

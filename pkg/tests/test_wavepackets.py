import math

import numpy as np
import pytest

from timefreq import Grid, SampledFunction, dft, lp_norm
from timefreq.dyadic import DyadicInterval, Tile
from timefreq.norms import interval_weight
from timefreq.wavepackets import (
    build_kernel,
    build_window,
    coeffs_to_csv_rows,
    gabor_expand,
    gabor_reconstruct,
    model_function,
    tile_packet,
    wave_packet,
)


@pytest.fixture(scope="module")
def fine():
    g = Grid(12, 64.0)
    return g, build_window(g), build_kernel(g)


@pytest.fixture(scope="module")
def coarse():
    g = Grid(12, 16.0)
    return g, build_window(g, min_freq_samples=16)


class TestWindow:
    def test_frame_constant(self, fine):
        g, w, _ = fine
        assert w.frame_deviation() <= 1e-8

    def test_transform_support(self, fine):
        g, w, _ = fine
        xi = g.freqs()
        outside = (xi < -1e-12) | (xi > 1.0 + 1e-12)
        assert np.max(np.abs(w.phat[outside])) < 1e-12

    def test_time_decay_envelope(self, fine):
        g, w, _ = fine
        x = np.abs(g.signed_xs())
        c = np.max(np.abs(w.phi.values) * (1.0 + x) ** 4)
        # fitted once: the envelope constant stays moderate relative to the peak
        assert c <= 60.0 * np.max(np.abs(w.phi.values))

    def test_too_coarse_grid_rejected(self):
        g = Grid(10, 16.0)
        with pytest.raises(ValueError):
            build_window(g)  # default demands 64 samples across [0, 1]


class TestWavePacket:
    def test_base_packet_is_window(self, fine):
        g, w, _ = fine
        pk = wave_packet(w, 0, 0, 0.0)
        assert np.max(np.abs(pk.values - w.phi.values)) < 1e-12

    @pytest.mark.parametrize("kml", [(0, 3, 1.5), (2, 1, 3.0), (-1, 5, 2.5), (1, 2, -3.0)])
    def test_norm_preserved(self, fine, kml):
        g, w, _ = fine
        k, m, l = kml
        assert lp_norm(wave_packet(w, k, m, l), 2) == pytest.approx(lp_norm(w.phi, 2), rel=1e-8)

    def test_transform_support_window(self, fine):
        g, w, _ = fine
        pk = wave_packet(w, 2, 1, 3.0)
        xi = g.freqs()
        outside = (xi < 3 * 2.0**-2 - 1e-12) | (xi > 4 * 2.0**-2 + 1e-12)
        assert np.max(np.abs(dft(pk).values[outside])) < 1e-12

    def test_out_of_box_rejected(self, fine):
        g, w, _ = fine
        with pytest.raises(ValueError):
            wave_packet(w, 8, 1, 0.0)
        with pytest.raises(ValueError):
            wave_packet(w, 0, 0, 10 * g.length)
        with pytest.raises(ValueError):
            wave_packet(w, 0, 0, 0.3)


class TestGaborFrame:
    def test_empty_set_zero_coefficients(self, coarse):
        g, w = coarse
        coeffs = gabor_expand(w, SampledFunction.zero(g), 0)
        assert all(c == 0 for c in coeffs.values())
        recon = gabor_reconstruct(w, coeffs, 0)
        assert np.max(np.abs(recon.values)) == 0.0

    def test_parseval(self, coarse):
        g, w = coarse
        f = SampledFunction.indicator(g, [(0.5, 1.25), (9.0, 9.75)])
        coeffs = gabor_expand(w, f, 0)
        total = sum(abs(c) ** 2 for c in coeffs.values())
        assert total == pytest.approx(w.frame_constant * lp_norm(f, 2) ** 2, rel=1e-6)

    def test_reconstruction_unit_interval(self, coarse):
        g, w = coarse
        f = SampledFunction.indicator(g, [(0.0, 1.0)])
        recon = gabor_reconstruct(w, gabor_expand(w, f, 0), 0)
        assert lp_norm(recon - f, 2) / lp_norm(f, 2) <= 1e-6

    def test_reconstruction_scale_independent(self, coarse):
        g, w = coarse
        f = SampledFunction.indicator(g, [(2.0, 3.5)])
        r0 = gabor_reconstruct(w, gabor_expand(w, f, 0), 0)
        r2 = gabor_reconstruct(w, gabor_expand(w, f, 2), 2)
        assert lp_norm(r0 - r2, 2) / lp_norm(f, 2) <= 1e-6

    def test_random_unions_all_scales(self, coarse):
        g, w = coarse
        rng = np.random.default_rng(77)
        for _ in range(5):
            ivs = []
            for _ in range(int(rng.integers(1, 4))):
                a = rng.uniform(0, 14)
                ivs.append((a, min(a + rng.uniform(0.1, 1.5), 16.0)))
            f = SampledFunction.indicator(g, ivs)
            for k in (-2, 0, 2):
                recon = gabor_reconstruct(w, gabor_expand(w, f, k), k)
                assert lp_norm(recon - f, 2) / lp_norm(f, 2) <= 1e-6

    def test_coefficient_decay(self, fine):
        g, w, _ = fine
        f = SampledFunction.indicator(g, [(0.0, 1.0)])
        coeffs = gabor_expand(w, f, 0)
        w0 = round(g.length)
        worst = max(
            abs(c) * (1 + min(m, w0 - m)) ** 3 for (m, l2), c in coeffs.items()
        )
        assert worst <= 8.0  # fitted envelope constant

    def test_csv_rows(self, coarse):
        g, w = coarse
        coeffs = {(0, 3): 1 + 2j, (1, 0): 0.5 + 0j}
        rows = coeffs_to_csv_rows(coeffs, 1)
        assert rows == [(1, 0, 3, 1.0, 2.0), (1, 2, 0, 0.5, 0.0)]


class TestKernel:
    def test_positive_with_positive_origin(self, fine):
        g, _, ker = fine
        vals = ker.K.values
        assert np.max(np.abs(vals.imag)) == 0.0
        assert np.min(vals.real) >= -1e-12
        assert vals.real[0] > 0.0

    def test_transform_support(self, fine):
        g, _, ker = fine
        kh = dft(ker.K)
        xi = g.freqs()
        assert np.max(np.abs(kh.values[np.abs(xi) > 1.0 + 1e-12])) < 1e-12

    def test_two_quadratures_agree(self, fine):
        g, _, ker = fine
        grid_val = dft(ker.K).values[g.n // 2].real
        quad_val = float(ker.khat(np.array([0.0]))[0])
        assert abs(grid_val - quad_val) <= 1e-8

    def test_bad_eta_rejected(self, fine):
        g, _, _ = fine
        with pytest.raises(ValueError):
            build_kernel(g, lambda xi: np.exp(-np.asarray(xi) ** 2))  # support too wide
        with pytest.raises(ValueError):
            build_kernel(g, "boxcar")

    def test_sharp_choice(self):
        g = Grid(10, 16.0)
        ker = build_kernel(g, "sharp")
        assert np.min(ker.K.values.real) >= -1e-12


def random_tile(g, rng, freq_max=8.0):
    k = int(rng.integers(-2, 2))
    mt = int(rng.integers(0, g.length * 2.0**-k - 1))
    mf = int(rng.integers(0, max(1, int(freq_max * 2.0**k))))
    return Tile(DyadicInterval(k, mt), DyadicInterval(-k, mf))


class TestModelFunction:
    def test_theta_support(self, fine):
        g, w, ker = fine
        s = Tile(DyadicInterval(0, 30), DyadicInterval(0, 3))
        mf = model_function(w, ker, s)
        xi = g.freqs()
        sup = mf.theta_support
        vals = mf.theta_slice(round(s.time.center / g.dx))
        outside = (xi < sup.a - 1e-9) | (xi > sup.b + 1e-9)
        assert np.max(np.abs(vals[outside])) < 1e-10

    def test_x_decay_single_constant(self, fine):
        g, w, ker = fine
        rng = np.random.default_rng(11)
        cs = []
        for _ in range(20):
            s = random_tile(g, rng)
            mf = model_function(w, ker, s)
            vals = np.abs(mf.x_slice(s.freq.center))
            weight = interval_weight(s.time.to_interval(), g.xs(), 4.0, period=g.length)
            cs.append(np.max(vals / weight) * math.sqrt(s.time.length))
        assert max(cs) <= 12.0  # single fitted constant across tiles

    def test_slice_paths_agree(self, fine):
        g, w, ker = fine
        s = Tile(DyadicInterval(1, 7), DyadicInterval(-1, 5))
        mf = model_function(w, ker, s)
        for jtheta in (g.n // 2 + 100, g.n // 2 + 200):
            theta = (jtheta - g.n // 2) * g.dxi
            xsl = mf.x_slice(theta)
            for xin in (64, 900, 2048):
                tsl = mf.theta_slice(xin)
                assert abs(tsl[jtheta] - xsl[xin]) < 1e-12

    def test_against_direct_quadrature(self, fine):
        g, w, ker = fine
        s = Tile(DyadicInterval(0, 31), DyadicInterval(0, 2))
        mf = model_function(w, ker, s)
        packet = tile_packet(w, s).values
        kk = ker.scaled_time(s.scale)
        ys = g.xs()
        rng = np.random.default_rng(4)
        for _ in range(4):
            xin = int(rng.integers(0, g.n))
            jtheta = int(rng.integers(g.n // 2 - 300, g.n // 2 + 300))
            theta = (jtheta - g.n // 2) * g.dxi
            direct = np.sum(
                np.roll(packet, -xin) * kk * np.exp(-2j * np.pi * theta * ys)
            ) * g.dx
            assert abs(mf.x_slice(theta)[xin] - direct) < 1e-8


class TestTilePacket:
    def test_unit_norm_and_support(self, fine):
        g, w, _ = fine
        s = Tile(DyadicInterval(0, 20), DyadicInterval(0, 5))
        pk = tile_packet(w, s)
        assert lp_norm(pk, 2) == pytest.approx(1.0, abs=1e-9)
        ph = dft(pk).values
        xi = g.freqs()
        outside = (xi < s.freq.left - 1e-12) | (xi > s.freq.right + 1e-12)
        assert np.max(np.abs(ph[outside])) < 1e-12

    def test_vanishes_at_interval_multiples(self, fine):
        g, w, _ = fine
        s = Tile(DyadicInterval(0, 20), DyadicInterval(0, 5))
        ph = dft(tile_packet(w, s)).values
        for xi_val in (5.0, 6.0, 4.0):
            j = round(xi_val / g.dxi) + g.n // 2
            assert abs(ph[j]) < 1e-12

"""Window construction, Gabor wave packets, frame expansion and
reconstruction, the positive averaging kernel, and the kernel-smoothed model
functions attached to tiles.

The window transform is the square root of a smooth partition of unity with
half-integer frequency shifts, which makes the frame constant exactly one and
the grid expansion identity exact up to roundoff.  Model functions pair a
tile with a packet whose transform fills the tile's frequency interval and
smear it in theta with a kernel whose transform is supported in [-1, 1];
their theta-support therefore stays inside the tile's frequency interval
enlarged by one reciprocal length on each side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import Interval, Tile
from .grid import Grid, SampledFunction, dft, idft

__all__ = [
    "Window",
    "Kernel",
    "ModelFunction",
    "build_window",
    "build_kernel",
    "wave_packet",
    "tile_packet",
    "gabor_expand",
    "gabor_reconstruct",
    "model_function",
    "coeffs_to_csv_rows",
]

_QUAD_NODES = 4096


DEFAULT_ORDER = 15


def smooth_step(t, order: float = DEFAULT_ORDER) -> np.ndarray:
    """Monotone step, 0 for t <= 0 and 1 for t >= 1, flat to ``order`` at both ends.

    Bernstein form of the regularized incomplete beta I_t(m+1, m+1): a sum of
    nonnegative terms, so the endpoint values 0 and 1 are exact in floating
    point and the first m derivatives vanish there.  An odd order keeps the
    square root of the derived partition bump smooth at its support edges.
    """
    m = max(1, int(round(order)))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.where(t >= 1.0, 1.0, 0.0)
    inside = (t > 0) & (t < 1)
    ti = t[inside]
    acc = np.zeros_like(ti)
    for k in range(m + 1, 2 * m + 2):
        acc += math.comb(2 * m + 1, k) * ti**k * (1.0 - ti) ** (2 * m + 1 - k)
    out[inside] = acc
    return out


def partition_bump(xi, order: float = DEFAULT_ORDER) -> np.ndarray:
    """Smooth bump b on [0, 1] with sum_l b(xi - l/2) = 1 everywhere.

    Rises as a smooth step on [0, 1/2] and falls as its exact complement on
    [1/2, 1], so overlapping half-integer shifts cancel to one in floating
    point as well.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    lo = (xi >= 0.0) & (xi <= 0.5)
    hi = (xi > 0.5) & (xi <= 1.0)
    out[lo] = smooth_step(2.0 * xi[lo], order)
    out[hi] = 1.0 - smooth_step(2.0 * xi[hi] - 1.0, order)
    return out


@dataclass
class Window:
    """Frame window: phat = sqrt(b) for the canonical partition bump b."""

    grid: Grid
    smoothness: float
    phat: np.ndarray = field(repr=False)
    phi: SampledFunction = field(repr=False)
    frame_constant: float = 1.0
    bump_integral: float = 0.0

    def bump(self, xi) -> np.ndarray:
        return partition_bump(xi, self.smoothness)

    def phat_profile(self, xi) -> np.ndarray:
        return np.sqrt(self.bump(xi))

    def frame_deviation(self) -> float:
        """max over grid frequencies of |sum_l |phat(xi - l/2)|^2 - C|."""
        b = self.bump(self.grid.freqs())
        shift = round(0.5 / self.grid.dxi)
        total = np.zeros_like(b)
        for l in range(self.grid.n // shift):
            total += np.roll(b, l * shift)
        return float(np.max(np.abs(total - self.frame_constant)))

    def lattice_sizes(self, k: int) -> tuple[int, int]:
        """(time positions, doubled frequency positions) of the scale-k lattice."""
        w0 = self.grid.length * math.ldexp(1.0, -k)
        if w0 != round(w0) or round(w0) < 2 or round(w0) % 2:
            raise ValueError(f"scale {k} has no even integer lattice on this grid")
        w0 = int(round(w0))
        n_freq = (2 * self.grid.n) // w0
        if n_freq * w0 != 2 * self.grid.n:
            raise ValueError(f"scale {k} lattice does not divide the frequency torus")
        return w0, n_freq

    def packet_profile(self, k: int) -> np.ndarray:
        """sqrt(b) at the w0+1 relative frequency offsets of a scale-k packet."""
        w0, _ = self.lattice_sizes(k)
        return self.phat_profile(np.arange(w0 + 1) / w0)


def build_window(grid: Grid, smoothness: float = DEFAULT_ORDER, min_freq_samples: int = 64) -> Window:
    """Construct the canonical window with frame constant one.

    ``smoothness`` is the flatness order of the transition (the number of
    derivatives vanishing at the support edges), which sets the polynomial
    decay order of the window in time.  The transform is supported in [0, 1],
    which must contain at least ``min_freq_samples`` grid frequencies
    (i.e. L >= min_freq_samples); pass a smaller value explicitly to work on
    coarse boxes.
    """
    if grid.length < min_freq_samples:
        raise ValueError(
            f"[0,1] in frequency spans only {grid.length:g} samples; "
            f"need >= {min_freq_samples} (grid too coarse)"
        )
    if grid.freq_halfwidth < 1.0:
        raise ValueError("frequency box must contain [0, 1]")
    if smoothness <= 0:
        raise ValueError("smoothness must be positive")
    xi = grid.freqs()
    b = partition_bump(xi, smoothness)
    phat = np.sqrt(b)
    phi = idft(SampledFunction(grid, phat.astype(np.complex128)))
    nodes = (np.arange(_QUAD_NODES) + 0.5) / _QUAD_NODES
    b_int = float(np.mean(partition_bump(nodes, smoothness)))
    return Window(grid, smoothness, phat, phi, 1.0, b_int)


def wave_packet(w: Window, k: int, m: int, l: float) -> SampledFunction:
    """L^2-normalized wave packet 2^(-k/2) phi(2^-k x - m) e^(2 pi i 2^-k x l).

    ``l`` is a half-integer modulation index.  The nominal time-frequency
    rectangle [m 2^k, (m+1) 2^k] x [l 2^-k, (l+1) 2^-k] must fit in the box.
    """
    if abs(2 * l - round(2 * l)) > 1e-12:
        raise ValueError(f"modulation index must be a half-integer, got {l}")
    g = w.grid
    scale = math.ldexp(1.0, k)
    if m * scale < 0 or (m + 1) * scale > g.length:
        raise ValueError("packet time interval falls outside the box")
    fh = g.freq_halfwidth
    if l * 2.0**-k < -fh or (l + 1) * 2.0**-k > fh:
        raise ValueError("packet frequency interval falls outside the box")
    u = math.ldexp(1.0, k) * g.freqs() - l
    vals = 2.0 ** (k / 2.0) * w.phat_profile(u) * np.exp(-2j * np.pi * m * u)
    return idft(SampledFunction(g, vals))


TILE_PROFILE_POWER = 4


def tile_packet(w: Window, s: Tile) -> SampledFunction:
    """Unit-norm packet attached to a tile.

    The transform is a sine-power bump filling omega_s, so it vanishes
    exactly at the endpoints of omega_s (and at every multiple of |omega_s|)
    and the time side concentrates at I_s with clean polynomial tails.
    """
    vals = tile_packet_hat(w, s)
    return idft(SampledFunction(w.grid, vals))


def _tile_profile(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = (u > 0.0) & (u < 1.0)
    out[inside] = np.sin(np.pi * u[inside]) ** TILE_PROFILE_POWER
    return out


def _tile_profile_norm() -> float:
    # integral of sin(pi u)^(2p) over [0, 1] is binom(2p, p) / 4^p
    p = TILE_PROFILE_POWER
    return math.comb(2 * p, p) / 4.0**p


def tile_packet_hat(w: Window, s: Tile) -> np.ndarray:
    g = w.grid
    k = s.scale
    iv = s.time.to_interval()
    if iv.a < 0 or iv.b > g.length:
        raise ValueError("tile time interval falls outside the box")
    if not Interval(-g.freq_halfwidth, g.freq_halfwidth).contains(s.freq.to_interval()):
        raise ValueError("tile frequency interval falls outside the box")
    xi = g.freqs()
    u = math.ldexp(1.0, k) * xi - s.freq.m
    amp = 2.0 ** (k / 2.0) / math.sqrt(_tile_profile_norm())
    phase = np.exp(-2j * np.pi * s.time.center * (xi - s.freq.left))
    return amp * _tile_profile(u) * phase


def _lattice_indices(w: Window, k: int, l2: int) -> np.ndarray:
    g = w.grid
    w0, _ = w.lattice_sizes(k)
    j_start = g.n // 2 + l2 * (w0 // 2)
    return (j_start + np.arange(w0 + 1)) % g.n


def gabor_expand(w: Window, f: SampledFunction, k: int) -> dict[tuple[int, int], complex]:
    """Frame coefficients <f, phi_{k,m,l/2}> over the full scale-k lattice.

    Keys are (m, l2) with l2 the doubled modulation index; m runs over the
    L 2^-k time positions and l2 over the 2N/(L 2^-k) periodized modulations,
    so reconstruction from these coefficients is exact on the grid.
    """
    g = w.grid
    w0, n_freq = w.lattice_sizes(k)
    prof = w.packet_profile(k)
    fh = dft(f).values
    u = np.arange(w0 + 1) / w0
    mmat = np.exp(2j * np.pi * np.outer(np.arange(w0), u))  # (m, t)
    amp = 2.0 ** (k / 2.0) / g.length
    out: dict[tuple[int, int], complex] = {}
    for l2 in range(n_freq):
        jj = _lattice_indices(w, k, l2)
        gvec = fh[jj] * prof
        cm = amp * (mmat @ gvec)
        for m in range(w0):
            out[(m, l2)] = complex(cm[m])
    return out


def gabor_reconstruct(w: Window, coeffs: dict[tuple[int, int], complex], k: int) -> SampledFunction:
    """Sum of coeff * packet over the scale-k lattice; inverts :func:`gabor_expand`."""
    g = w.grid
    w0, n_freq = w.lattice_sizes(k)
    prof = w.packet_profile(k)
    u = np.arange(w0 + 1) / w0
    recon_hat = np.zeros(g.n, dtype=np.complex128)
    amp = 2.0 ** (k / 2.0)
    cm = np.zeros(w0, dtype=np.complex128)
    for l2 in range(n_freq):
        cm[:] = 0.0
        seen = False
        for m in range(w0):
            c = coeffs.get((m, l2))
            if c is not None:
                cm[m] = c
                seen = True
        if not seen:
            continue
        st = cm @ np.exp(-2j * np.pi * np.outer(np.arange(w0), u))
        jj = _lattice_indices(w, k, l2)
        np.add.at(recon_hat, jj, amp * prof * st)
    return idft(SampledFunction(g, recon_hat))


def coeffs_to_csv_rows(coeffs: dict[tuple[int, int], complex], k: int) -> list[tuple]:
    """Rows (k, 2m, 2l, re, im), sorted; doubled indices keep keys integral."""
    rows = []
    for (m, l2) in sorted(coeffs):
        c = coeffs[(m, l2)]
        rows.append((k, 2 * m, l2, c.real, c.imag))
    return rows


# ---------------------------------------------------------------------------
# kernel


def _default_eta_profile(order: float = DEFAULT_ORDER):
    def profile(xi):
        return partition_bump(np.asarray(xi, dtype=float) + 0.5, order)

    return profile


@dataclass
class Kernel:
    """Positive averaging kernel K = |inverse transform of eta|^2.

    eta is smooth, supported in [-1/2, 1/2] with nonzero integral, so the
    transform of K is the autocorrelation eta * eta~, supported in [-1, 1],
    and K(0) = (integral of eta)^2 > 0.
    """

    grid: Grid
    eta_profile: object = field(repr=False)
    eta: SampledFunction = field(repr=False)
    K: SampledFunction = field(repr=False)
    _khat_cache: dict = field(default_factory=dict, repr=False)
    _ktime_cache: dict = field(default_factory=dict, repr=False)

    def khat(self, xi) -> np.ndarray:
        """Autocorrelation (eta * eta~)(xi) by quadrature on the profile."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        nodes = -0.5 + (np.arange(_QUAD_NODES) + 0.5) / _QUAD_NODES
        ev = np.asarray(self.eta_profile(nodes), dtype=float)
        out = np.empty(xi.shape, dtype=float)
        chunk = 1 << 12
        for i in range(0, xi.size, chunk):
            block = xi[i : i + chunk]
            shifted = self.eta_profile(nodes[None, :] - block[:, None])
            out[i : i + chunk] = (shifted * ev[None, :]).sum(axis=1) / _QUAD_NODES
        return out

    def khat_lattice(self, k: int) -> np.ndarray:
        """khat on the extended scale-k lattice i * 2^k / L, |i| <= n - 1."""
        if k not in self._khat_cache:
            n = self.grid.n
            pts = math.ldexp(1.0, k) * np.arange(-(n - 1), n) * self.grid.dxi
            self._khat_cache[k] = self.khat(pts)
        return self._khat_cache[k]

    def khat_grid(self, k: int) -> np.ndarray:
        """khat(2^k xi_j) over the frequency axis."""
        return self.khat_lattice(k)[(self.grid.n - 1) + np.arange(self.grid.n) - self.grid.n // 2]

    def scaled_time(self, k: int) -> np.ndarray:
        """Samples of 2^-k K(2^-k y): the inverse transform of khat(2^k xi)."""
        if k not in self._ktime_cache:
            vals = idft(SampledFunction(self.grid, self.khat_grid(k).astype(np.complex128))).values
            self._ktime_cache[k] = vals
        return self._ktime_cache[k]


def build_kernel(grid: Grid, eta_choice="smooth") -> Kernel:
    """Build the kernel from a named eta profile or a custom callable.

    ``eta_choice`` is "smooth" (default), "sharp", or a callable profile on
    the frequency axis.  The profile must be supported in [-1/2, 1/2] and have
    nonzero integral; violations raise ValueError.
    """
    if eta_choice == "smooth":
        profile = _default_eta_profile(DEFAULT_ORDER)
    elif eta_choice == "sharp":
        profile = _default_eta_profile(5)
    elif callable(eta_choice):
        profile = eta_choice
    else:
        raise ValueError(f"unknown eta choice: {eta_choice!r}")

    probe = np.linspace(-4.0, 4.0, 8193)
    vals = np.asarray(profile(probe), dtype=float)
    outside = np.abs(probe) > 0.5 + 1e-12
    if np.any(np.abs(vals[outside]) >= 1e-12):
        raise ValueError("eta must be supported in [-1/2, 1/2]")
    if abs(np.trapezoid(vals, probe)) < 1e-8:
        raise ValueError("eta must have nonzero integral")
    if grid.freq_halfwidth < 1.0:
        raise ValueError("frequency box must contain the kernel support [-1, 1]")

    eta = SampledFunction(grid, np.asarray(profile(grid.freqs()), dtype=np.complex128))
    e = idft(eta)
    kvals = np.abs(e.values) ** 2
    kernel = Kernel(grid, profile, eta, SampledFunction(grid, kvals.astype(np.complex128)))
    return kernel


# ---------------------------------------------------------------------------
# model functions


@dataclass
class ModelFunction:
    """Two-argument model function of a tile, evaluated lazily.

    For a tile of scale k with packet p, this is
    F_y[p(x + y) 2^-k K(y / 2^k)](theta): the packet correlated against the
    scaled kernel and transformed in the offset variable.  Its theta-support
    sits inside the packet support enlarged by 2^-k on each side, and in x it
    inherits the packet decay at scale |I_s|.
    """

    tile: Tile
    window: Window
    kernel: Kernel
    packet_hat: np.ndarray = field(repr=False)
    packet: SampledFunction = field(repr=False)

    @property
    def theta_support(self) -> Interval:
        k = self.tile.scale
        lo = self.tile.freq.left - math.ldexp(1.0, -k)
        hi = self.tile.freq.right + math.ldexp(1.0, -k)
        return Interval(lo, hi)

    def x_slice(self, theta: float) -> np.ndarray:
        """phi_s(x, theta) for all grid x at one theta (any real frequency)."""
        g = self.window.grid
        k = self.tile.scale
        ratio = theta / g.dxi
        j0 = round(ratio)
        if abs(ratio - j0) < 1e-9:
            lat = self.kernel.khat_lattice(k)
            idx = (g.n - 1) + (j0 + g.n // 2) - np.arange(g.n)
            kv = lat[idx]
        else:
            kv = self.kernel.khat(math.ldexp(1.0, k) * (theta - g.freqs()))
        return idft(SampledFunction(g, self.packet_hat * kv)).values

    def theta_slice(self, x_index: int) -> np.ndarray:
        """phi_s(x, theta) over all grid thetas at one grid x (FFT path)."""
        g = self.window.grid
        k = self.tile.scale
        shifted = np.roll(self.packet.values, -x_index)
        return dft(SampledFunction(g, shifted * self.kernel.scaled_time(k))).values


def model_function(w: Window, ker: Kernel, s: Tile) -> ModelFunction:
    """Model function of a tile; see :class:`ModelFunction`."""
    if w.grid is not ker.grid and (w.grid.j != ker.grid.j or w.grid.length != ker.grid.length):
        raise ValueError("window and kernel must share a grid")
    phat = tile_packet_hat(w, s)
    packet = idft(SampledFunction(w.grid, phat))
    return ModelFunction(s, w, ker, phat, packet)

"""Greedy size-decrement forest selection, the two-piece decomposition of
model functions relative to a tree, and the tree variation report.

The selection removes, at each size level n, offender tiles (singleton size
above 2^-(n+1)) in order of lowest frequency left endpoint, sweeping each
offender's associated tree out of the residual.  A tile t joins the tree of
offender s* when I_t lies inside I_s* and omega_s* lies inside the tenfold
dilate of omega_t; sweeping is downward closed for the tile order, which
keeps every emitted level convex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .dyadic import Forest, Tile, Tree, is_convex
from .grid import SampledFunction, lp_norm_values
from .norms import per_tile_sizes, tile_size, variational_norm_field
from .wavepackets import Kernel, ModelFunction, Window, model_function, smooth_step, tile_packet

__all__ = [
    "ForestDecomposition",
    "TreePieces",
    "select_forests",
    "tree_decompose",
    "tree_coefficients",
    "TreeVariationReport",
    "tree_variation_report",
    "ZERO_SIZE_LEVEL",
]

ZERO_SIZE_LEVEL = 60


@dataclass(frozen=True)
class ForestDecomposition:
    """Disjoint union of per-level forests with size certificates.

    ``delta`` records ceil(-log2 size) of the input; the first emitted level
    is floor(-log2 size), one below delta when the size is not an exact power
    of two, since otherwise the first level could not certify 2^-n.  Tiles of
    size zero land at level ``ZERO_SIZE_LEVEL``.
    """

    levels: tuple[Forest, ...]
    delta: int
    sizes: dict = field(repr=False)

    def all_tiles(self) -> set[Tile]:
        out: set[Tile] = set()
        for forest in self.levels:
            out |= forest.tiles()
        return out

    def level_map(self) -> dict[int, Forest]:
        return {f.level: f for f in self.levels}

    def summary_rows(self) -> list[tuple]:
        """(level, tree count, tile count, sum of top lengths, max size) per level."""
        rows = []
        for f in self.levels:
            tiles = f.tiles()
            rows.append(
                (
                    f.level,
                    len(f.trees),
                    len(tiles),
                    f.top_length_sum(),
                    max((self.sizes[s] for s in tiles), default=0.0),
                )
            )
        return rows

    def to_text(self) -> str:
        """Tile serialization with a level column appended."""
        lines = []
        for f in self.levels:
            for s in sorted(f.tiles(), key=Tile.sort_key):
                lines.append(f"{s.time.k} {s.time.m} {s.freq.k} {s.freq.m} {f.level}")
        return "\n".join(lines) + ("\n" if lines else "")


def _sweep_members(top: Tile, residual: set[Tile]) -> frozenset[Tile]:
    omega_top = top.freq.to_interval()
    return frozenset(
        t
        for t in residual
        if top.time.contains(t.time) and t.freq.to_interval().dilate(10.0).contains(omega_top)
    )


def select_forests(
    tiles: Iterable[Tile],
    f: SampledFunction,
    family_size: int = 8,
    check_convexity: bool = True,
) -> ForestDecomposition:
    """Split a convex tile collection into size-certified forests.

    Every emitted level n satisfies (and the loop enforces) that the size of
    its tile set is at most 2^-n, and records the sum of tree top lengths for
    counting checks.
    """
    tile_set = set(tiles)
    if check_convexity and not is_convex(tile_set):
        raise ValueError("forest selection requires a convex tile collection")
    sizes = per_tile_sizes(tile_set, f, family_size)
    sigma = max(sizes.values(), default=0.0)
    delta = ZERO_SIZE_LEVEL if sigma == 0.0 else math.ceil(-math.log2(sigma))

    levels: list[Forest] = []
    residual = set(tile_set)
    n = ZERO_SIZE_LEVEL if sigma == 0.0 else math.floor(-math.log2(sigma))
    while residual:
        if n >= ZERO_SIZE_LEVEL:
            n = ZERO_SIZE_LEVEL
            thresh = -1.0  # sweep everything that is left
        else:
            thresh = math.ldexp(1.0, -(n + 1))
        offenders = sorted(
            (s for s in residual if sizes[s] > thresh),
            key=lambda s: (s.freq.left, s.time.left, s.sort_key()),
        )
        trees = []
        while offenders:
            top = offenders[0]
            members = _sweep_members(top, residual)
            trees.append(
                Tree(top.time.to_interval(), top.freq.left, members, top_tile=top)
            )
            residual -= members
            offenders = [s for s in offenders if s not in members]
        if trees:
            level_tiles = set().union(*(t.tiles for t in trees))
            level_size = max(sizes[s] for s in level_tiles)
            if level_size > math.ldexp(1.0, -n):
                raise RuntimeError(
                    f"size certificate violated at level {n}: {level_size} > 2^-{n}"
                )
            levels.append(Forest(tuple(trees), n))
        if not residual:
            break
        res_sigma = max(sizes[s] for s in residual)
        n = ZERO_SIZE_LEVEL if res_sigma == 0.0 else max(n + 1, math.floor(-math.log2(res_sigma)))
    return ForestDecomposition(tuple(levels), delta, sizes)


# ---------------------------------------------------------------------------
# two-piece decomposition of a model function relative to a tree


def time_cutoff(t) -> np.ndarray:
    """Smooth even cutoff: one on [-1/4, 1/4], supported in [-1/2, 1/2]."""
    t = np.abs(np.asarray(t, dtype=float))
    return smooth_step((0.5 - t) * 4.0)


@dataclass
class TreePieces:
    """Split of a tile's model function relative to a tree top.

    ``local`` is compactly supported in the 2^level dilate of I_s; ``tail``
    keeps the top-frequency mean of the local part plus everything outside,
    gains 2^(-M level) decay for every M, and is the piece entering the
    variational sums.  The two parts add back to the model function exactly.
    """

    tile: Tile
    top_freq: float
    level: int
    model: ModelFunction
    cutoff: np.ndarray = field(repr=False)
    cutoff_integral: float = 0.0

    def _mean_term(self, phi_vals: np.ndarray) -> np.ndarray:
        g = self.model.window.grid
        xs = g.xs()
        osc = np.exp(-2j * np.pi * self.top_freq * xs)
        amount = np.sum(phi_vals * osc * self.cutoff) * g.dx
        return np.conj(osc) * self.cutoff * (amount / self.cutoff_integral)

    def tail_slice(self, theta: float, phi_vals: Optional[np.ndarray] = None) -> np.ndarray:
        if phi_vals is None:
            phi_vals = self.model.x_slice(theta)
        if self.level == 0:
            return phi_vals
        return self._mean_term(phi_vals) + phi_vals * (1.0 - self.cutoff)

    def local_slice(self, theta: float, phi_vals: Optional[np.ndarray] = None) -> np.ndarray:
        if phi_vals is None:
            phi_vals = self.model.x_slice(theta)
        if self.level == 0:
            return np.zeros_like(phi_vals)
        return phi_vals * self.cutoff - self._mean_term(phi_vals)


def tree_decompose(
    s: Tile,
    tree: Tree,
    level: int,
    window: Window,
    kernel: Kernel,
    model: Optional[ModelFunction] = None,
) -> TreePieces:
    """Build the two pieces of the model function of s relative to the tree.

    At level zero the tail piece is the whole model function.  The local
    cutoff is the L-infinity-normalized dilation of the canonical time cutoff
    to 2^level |I_s| about the center of I_s, with distances wrapped on the
    period.
    """
    if level < 0:
        raise ValueError("decomposition level must be >= 0")
    g = window.grid
    if model is None:
        model = model_function(window, kernel, s)
    width = math.ldexp(s.time.length, level)
    d = g.xs() - s.time.center
    d = (d + g.length / 2) % g.length - g.length / 2
    cutoff = time_cutoff(d / width)
    integral = float(np.sum(cutoff) * g.dx)
    return TreePieces(s, tree.top_freq, level, model, cutoff, integral)


def tree_coefficients(tree: Tree, f: SampledFunction, window: Window) -> dict[Tile, complex]:
    """Packet coefficients <f, packet_s> for every tile of a tree."""
    out = {}
    for s in sorted(tree.tiles, key=Tile.sort_key):
        pk = tile_packet(window, s)
        out[s] = complex(np.sum(f.values * np.conj(pk.values)) * f.grid.dx)
    return out


@dataclass(frozen=True)
class TreeVariationReport:
    lhs: float
    rhs_scale: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs_scale if self.rhs_scale > 0 else math.inf


def tree_variation_report(
    tree: Tree,
    f: SampledFunction,
    level: int,
    r: float,
    t: float,
    window: Window,
    kernel: Kernel,
    decay_order: int = 4,
    family_size: int = 8,
) -> TreeVariationReport:
    """L^t norm of the scalewise r-variation of the tree's tail sums.

    lhs is the L^t_x norm of the V^r norm over scales k of
    sum over tiles of scale k of <f, packet_s> * tail_s(x, top frequency);
    rhs_scale is 2^(-decay_order * level) * size(tree) * |I_T|^(1/t), so the
    ratio tracks the tree bound with its implicit constant.
    """
    if not r > 2:
        raise ValueError("variation exponent must exceed 2")
    if not 1 < t < math.inf:
        raise ValueError("integrability exponent must lie in (1, inf)")
    g = window.grid
    coeffs = tree_coefficients(tree, f, window)
    scales = tree.scales()
    fields = np.zeros((len(scales), g.n), dtype=np.complex128)
    for i, k in enumerate(scales):
        for s in tree.tiles_at_scale(k):
            pieces = tree_decompose(s, tree, level, window, kernel)
            fields[i] += coeffs[s] * pieces.tail_slice(tree.top_freq)
    vr = variational_norm_field(fields, r)
    lhs = lp_norm_values(vr, g.dx, t)
    rhs = (
        2.0 ** (-decay_order * level)
        * tile_size(tree.tiles, f, family_size)
        * tree.top_interval.length ** (1.0 / t)
    )
    return TreeVariationReport(lhs, rhs)

"""Discrete symmetric decreasing rearrangement and the checks built on it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConstraintError
from .function_space import Grid, GridFunction, l2_norm_sq, sample, seminorm_fourier_sq
from .profiles import Profile, TwoBump, extent_of


def placement_order(grid: Grid) -> np.ndarray:
    """Node indices sorted by ``|x_k|``, ties (``-x`` before ``+x``) by index.

    The result is ``center, center-1, center+1, center-2, ...`` and ends at
    the unpaired node ``-L``.
    """
    off = grid.offsets()
    return np.lexsort((np.arange(grid.n), np.abs(off)))


@dataclass(frozen=True, eq=False)
class RearrangedFunction:
    """A grid function that is nonnegative and nonincreasing along :func:`placement_order`."""

    function: GridFunction

    def __post_init__(self) -> None:
        v = self.function.values
        if np.any(v < 0):
            raise ConstraintError("rearranged function has negative samples")
        ordered = v[placement_order(self.function.grid)]
        if np.any(np.diff(ordered) > 0):
            raise ConstraintError("samples are not nonincreasing in |x|")

    @property
    def grid(self) -> Grid:
        return self.function.grid

    @property
    def values(self) -> np.ndarray:
        return self.function.values


def rearrange(f: GridFunction) -> RearrangedFunction:
    """Sort ``|f|`` descending and lay it out from the centre outwards."""
    vals = np.sort(np.abs(f.values))[::-1]
    out = np.empty_like(vals)
    out[placement_order(f.grid)] = vals
    return RearrangedFunction(GridFunction(f.grid, out))


def _as_function(f: GridFunction | RearrangedFunction) -> GridFunction:
    return f.function if isinstance(f, RearrangedFunction) else f


def equimeasurability_check(
    f: GridFunction, F: Callable[[np.ndarray], np.ndarray]
) -> tuple[float, float]:
    """``(int F(f*), int F(|f|))`` with uniform weights.

    ``math.fsum`` is correctly rounded, so the two numbers are identical
    whenever ``f*`` is a permutation of ``|f|``.
    """
    star = rearrange(f).values
    h = f.grid.h
    a = h * math.fsum(np.asarray(F(star), dtype=float))
    b = h * math.fsum(np.asarray(F(np.abs(f.values)), dtype=float))
    return a, b


def polya_szego_deficit(f: GridFunction) -> float:
    """``[f]^2 - [f*]^2`` in the spectral seminorm; nonnegative up to discretization."""
    return seminorm_fourier_sq(f) - seminorm_fourier_sq(rearrange(f).function)


def radial_bound_check(f: RearrangedFunction | GridFunction) -> float:
    """Worst margin of ``u(x)^2 <= ||u||_2^2 / (2|x|)`` over nodes ``x != 0``."""
    g = _as_function(f)
    x = np.abs(g.grid.nodes)
    mask = x > 0
    margin = l2_norm_sq(g) / (2.0 * x[mask]) - g.values[mask] ** 2
    return float(np.min(margin))


def strauss_fixture(n_shift: float, psi: Profile, grid: Grid) -> GridFunction:
    """``psi(x - n) + psi(x + n)`` sampled on ``grid``; the bumps must not overlap."""
    r = extent_of(psi)
    if not math.isfinite(r):
        raise ConstraintError("psi must have compact support")
    if n_shift < r:
        raise ConstraintError(f"shift {n_shift} < support radius {r}: the bumps overlap")
    if n_shift + r >= grid.L:
        raise ConstraintError(f"shift {n_shift} + radius {r} does not fit in [-{grid.L}, {grid.L})")
    return sample(grid, TwoBump(n_shift, psi))

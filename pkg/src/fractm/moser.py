"""The Moser sequence: profiles, exact norms, and the concentration experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ExponentOverflowError, ResolutionError
from .function_space import Grid, GridFunction, l2_norm_sq, sample, seminorm_fourier_sq
from .functionals import FunctionalSpec, Kind, as_exponent, evaluate, Exponent

#: plateau must span at least this many cells: h <= eps * radius / RESOLUTION
RESOLUTION = 4
DEFAULT_L = 2.0
MAX_AUTO_N = 2**22


@dataclass(frozen=True)
class MoserParam:
    epsilon: float

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    @property
    def T(self) -> float:
        """``log(1/epsilon)``."""
        return -math.log(self.epsilon)


def as_param(p: float | MoserParam) -> MoserParam:
    return p if isinstance(p, MoserParam) else MoserParam(float(p))


@dataclass(frozen=True)
class Moser:
    """Moser profile supported in ``[-radius, radius]``.

    ``sqrt(T)`` on ``|x| < eps radius``, ``log(radius/|x|)/sqrt(T)`` up to
    ``|x| = radius`` and zero beyond, with ``T = log(1/eps)``.
    """

    epsilon: float
    radius: float = 1.0

    @property
    def extent(self) -> float:
        return self.radius

    def __call__(self, x: np.ndarray) -> np.ndarray:
        T = -math.log(self.epsilon)
        r = np.abs(np.asarray(x, dtype=float)) / self.radius
        out = np.zeros_like(r)
        core = r < self.epsilon
        ramp = (~core) & (r < 1.0)
        out[core] = math.sqrt(T)
        out[ramp] = -np.log(r[ramp]) / math.sqrt(T)
        return out


def check_resolution(p: MoserParam, grid: Grid, radius: float = 1.0) -> None:
    if grid.h > p.epsilon * radius / RESOLUTION:
        raise ResolutionError(
            f"h={grid.h:.3g} does not resolve the plateau of eps={p.epsilon:.3g}"
            f" (need h <= eps/{RESOLUTION})"
        )
    if grid.L < 2.0 * radius:
        raise ResolutionError(f"half width {grid.L} too short for support radius {radius}")


def moser_grid(
    p: float | MoserParam, L: float = DEFAULT_L, cells_per_plateau: int = 8
) -> Grid:
    """Smallest power-of-two grid on ``[-L, L)`` with ``h <= eps/cells_per_plateau``."""
    p = as_param(p)
    need = 2.0 * L * cells_per_plateau / p.epsilon
    n = 1 << max(4, math.ceil(math.log2(need)))
    if n > MAX_AUTO_N:
        raise ResolutionError(f"eps={p.epsilon:.3g} needs n={n} > {MAX_AUTO_N}")
    return Grid(L, n)


def moser_function(p: float | MoserParam, grid: Grid) -> GridFunction:
    p = as_param(p)
    check_resolution(p, grid)
    return sample(grid, Moser(p.epsilon))


def moser_l2_sq_exact(p: float | MoserParam) -> float:
    """``2 eps T + (2/T) (2 - e^{-T}(T^2 + 2T + 2))``."""
    p = as_param(p)
    T, eps = p.T, p.epsilon
    return 2.0 * eps * T + (2.0 / T) * (2.0 - math.exp(-T) * (T * T + 2.0 * T + 2.0))


def moser_seminorm_sq(p: float | MoserParam, grid: Grid) -> float:
    return seminorm_fourier_sq(moser_function(p, grid))


def normalized_moser(p: float | MoserParam, grid: Grid) -> GridFunction:
    """``v_eps = u_eps / ||(-Delta)^(1/4) u_eps||``."""
    u = moser_function(p, grid)
    return u / math.sqrt(seminorm_fourier_sq(u))


def asymptotic_window(alpha: float | Exponent) -> tuple[float, float]:
    """Admissible ``eps`` range ``[exp(-2/(1-alpha/pi)), exp(-1/(1-alpha/pi))]``."""
    a = as_exponent(alpha)
    if not a.is_subcritical:
        raise ValueError("the window is defined for alpha < pi only")
    gap = 1.0 - a.ratio
    return math.exp(-2.0 / gap), math.exp(-1.0 / gap)


def asymptotic_epsilon(alpha: float | Exponent) -> MoserParam:
    """Geometric midpoint of :func:`asymptotic_window`."""
    lo, hi = asymptotic_window(alpha)
    return MoserParam(math.sqrt(lo * hi))


def asymptotic_lower_bound(alpha: float | Exponent, grid: Grid | None = None) -> float:
    """Adachi-Tanaka ratio of ``v_eps`` at the window midpoint: a lower bound for A(alpha)."""
    a = as_exponent(alpha)
    p = asymptotic_epsilon(a)
    grid = moser_grid(p) if grid is None else grid
    v = normalized_moser(p, grid)
    return evaluate(FunctionalSpec(Kind.ADACHI_TANAKA, a), v).value


@dataclass(frozen=True)
class MoserRow:
    epsilon: float
    T: float
    l2_exact: float
    l2_numeric: float
    seminorm: float
    ratio_at_alpha: float
    alpha: float
    L: float
    n: int
    status: str = "ok"


def moser_row(
    p: float | MoserParam, alpha: float | Exponent, grid: Grid | None = None
) -> MoserRow:
    """One row of the concentration table; failures are recorded, not raised."""
    p, a = as_param(p), as_exponent(alpha)
    nan = float("nan")
    try:
        g = moser_grid(p) if grid is None else grid
        u = moser_function(p, g)
    except ResolutionError:
        L, n = (grid.L, grid.n) if grid is not None else (nan, 0)
        return MoserRow(p.epsilon, p.T, moser_l2_sq_exact(p), nan, nan, nan, a.alpha, L, n, "unresolved")
    semi = seminorm_fourier_sq(u)
    l2 = l2_norm_sq(u)
    status = "ok"
    try:
        ratio = evaluate(FunctionalSpec(Kind.ADACHI_TANAKA, a), u / math.sqrt(semi)).value
    except ExponentOverflowError:
        ratio, status = math.inf, "overflow"
    return MoserRow(p.epsilon, p.T, moser_l2_sq_exact(p), l2, semi, ratio, a.alpha, g.L, g.n, status)


def moser_table(
    epsilons: Iterable[float | MoserParam],
    alpha: float | Exponent,
    grid: Grid | None = None,
) -> list[MoserRow]:
    return [moser_row(p, alpha, grid) for p in epsilons]


def critical_blowup_scan(
    epsilons: Iterable[float | MoserParam], grid: Grid | None = None
) -> list[MoserRow]:
    """Rows at the critical exponent ``alpha = pi``; with ``grid=None`` each row gets its own grid."""
    return moser_table(epsilons, math.pi, grid)


def blowup_slope(rows: Sequence[MoserRow]) -> float:
    """Least-squares slope of the tested ratio against ``T = log(1/eps)``.

    Overflowed rows count as unbounded growth and make the slope ``inf``.
    """
    if any(r.status == "overflow" for r in rows):
        return math.inf
    ok = [r for r in rows if r.status == "ok"]
    if len(ok) < 2:
        return float("nan")
    T = np.array([r.T for r in ok])
    y = np.array([r.ratio_at_alpha for r in ok])
    return float(np.polyfit(T, y, 1)[0])


def seminorm_excess_constant(rows: Sequence[MoserRow]) -> float:
    """Empirical ``max T (seminorm - pi)`` over resolved rows."""
    vals = [r.T * (r.seminorm - math.pi) for r in rows if r.status != "unresolved"]
    return max(vals) if vals else float("nan")

"""Grids, sampled functions, the operator (-Delta)^(1/4) and H^(1/2) norms.

Conventions
-----------
* The real line is truncated to ``[-L, L)`` and sampled at the ``n`` nodes
  ``x_k = (k - n/2) h`` with ``h = 2L/n``, i.e. ``{-L, ..., L - h}``.  The
  node ``-L`` has no mirror image.  Values are zero outside the window.
* Integrals use the trapezoid rule of the periodic extension, which on this
  node set is ``h * sum(values)``; all fixtures vanish at ``-L`` so this is
  the same number as the endpoint-halved rule, and it makes discrete
  Parseval exact.
* The Fourier transform is unitary, ``Fu(xi) = (2 pi)^(-1/2) int u(x)
  exp(-i xi x) dx``, so that ``||(-Delta)^(1/4) u||^2 = [u]^2 / (2 pi)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np

from .errors import DilationWarning, GridError, ImaginaryResidueError
from .profiles import Profile, extent_of

MIN_SAMPLES = 16
#: zero-padding factor used by spectral seminorms (frequency step pi/(PAD*L))
SPECTRAL_PAD = 4
IMAG_RESIDUE_TOL = 1e-10
#: relative amplitude below which samples count as "no mass"
NEGLIGIBLE = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[-L, L)`` with ``n`` nodes."""

    L: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.L) and self.L > 0):
            raise GridError(f"half width must be positive and finite, got {self.L}")
        if int(self.n) != self.n or self.n < 2 or self.n % 2:
            raise GridError(f"sample count must be an even integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        x = (np.arange(self.n) - self.n // 2) * self.h
        x.setflags(write=False)
        return x

    @property
    def center(self) -> int:
        """Index of the node ``x = 0``."""
        return self.n // 2

    def offsets(self) -> np.ndarray:
        """Integer node offsets ``k - n/2``; ``x_k = offsets[k] * h`` exactly."""
        return np.arange(self.n) - self.n // 2


def make_grid(L: float, n: int) -> Grid:
    """Validated grid constructor; rejects ``n < 16`` and odd ``n``."""
    if int(n) != n or n % 2 or n < MIN_SAMPLES:
        raise GridError(f"need an even sample count >= {MIN_SAMPLES}, got {n}")
    return Grid(L, n)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples on a :class:`Grid`; implicitly zero outside ``[-L, L)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)  # private copy
        if v.shape != (self.grid.n,):
            raise GridError(f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def _check(self, other: "GridFunction") -> None:
        if other.grid != self.grid:
            raise GridError("grid functions live on different grids")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)

    def __truediv__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, self.values / float(c))

    def inner(self, other: "GridFunction") -> float:
        """Discrete L^2 inner product ``h * sum(u v)``."""
        self._check(other)
        return self.grid.h * float(np.dot(self.values, other.values))

    def is_zero(self) -> bool:
        return not np.any(self.values)


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """Samples of the unitary Fourier transform at ``xi_j = 2 pi j / (n h)``."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n,):
            raise GridError(f"expected {self.grid.n} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def frequencies(self) -> np.ndarray:
        return _frequencies(self.grid)

    @property
    def dxi(self) -> float:
        return 2.0 * math.pi / (self.grid.n * self.grid.h)

    def energy(self, weight: np.ndarray | None = None) -> float:
        """``sum weight_j |c_j|^2 dxi``; plain Parseval energy when ``weight`` is None."""
        power = np.abs(self.coeffs) ** 2
        if weight is not None:
            power = weight * power
        return float(np.sum(power)) * self.dxi


@lru_cache(maxsize=64)
def _frequencies(grid: Grid) -> np.ndarray:
    xi = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.h)
    xi.setflags(write=False)
    return xi


@lru_cache(maxsize=64)
def _phase(grid: Grid) -> np.ndarray:
    # the FFT index origin sits at x = -L
    ph = np.exp(1j * _frequencies(grid) * grid.L)
    ph.setflags(write=False)
    return ph


def sample(grid: Grid, f: Profile) -> GridFunction:
    """Evaluate a closed-form profile at the grid nodes."""
    return GridFunction(grid, f(grid.nodes))


def l2_norm_sq(f: GridFunction) -> float:
    return f.grid.h * float(np.dot(f.values, f.values))


def lp_norm(f: GridFunction, p: float) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if f.is_zero():
        return 0.0
    a = np.abs(f.values)
    # factor out the max so that large p does not overflow
    top = float(a.max())
    return top * (f.grid.h * float(np.sum((a / top) ** p))) ** (1.0 / p)


def extend(f: GridFunction, factor: int) -> GridFunction:
    """Zero-pad ``f`` onto the centred grid ``[-factor L, factor L)``."""
    if int(factor) != factor or factor < 1:
        raise GridError(f"padding factor must be a positive integer, got {factor}")
    if factor == 1:
        return f
    big = Grid(f.grid.L * factor, f.grid.n * factor)
    vals = np.zeros(big.n)
    off = (big.n - f.grid.n) // 2
    vals[off : off + f.grid.n] = f.values
    return GridFunction(big, vals)


def restrict(f: GridFunction, grid: Grid) -> GridFunction:
    """Inverse of :func:`extend`: the samples of ``f`` on a centred sub-window."""
    if grid == f.grid:
        return f
    if not math.isclose(grid.h, f.grid.h, rel_tol=1e-12) or grid.n > f.grid.n:
        raise GridError("restrict needs a centred sub-grid with the same spacing")
    off = (f.grid.n - grid.n) // 2
    return GridFunction(grid, f.values[off : off + grid.n])


def to_spectral(f: GridFunction, pad: int = 1) -> SpectralFunction:
    """Unitary transform of ``f`` (after zero padding by ``pad``)."""
    g = extend(f, pad)
    coeffs = np.fft.fft(g.values) * _phase(g.grid) * (g.grid.h / math.sqrt(2.0 * math.pi))
    return SpectralFunction(g.grid, coeffs)


def _real_part(z: np.ndarray, what: str) -> np.ndarray:
    re = z.real
    scale = float(np.max(np.abs(re))) if re.size else 0.0
    resid = float(np.max(np.abs(z.imag))) if z.size else 0.0
    if resid > IMAG_RESIDUE_TOL * max(scale, 1e-300) and resid > 1e-300:
        raise ImaginaryResidueError(
            f"{what}: imaginary residue {resid:.3e} vs magnitude {scale:.3e}"
        )
    return re


def from_spectral(s: SpectralFunction) -> GridFunction:
    g = s.grid
    z = np.fft.ifft(np.asarray(s.coeffs) / _phase(g)) * (math.sqrt(2.0 * math.pi) / g.h)
    return GridFunction(g, _real_part(z, "from_spectral"))


def fourier_multiplier(
    f: GridFunction, symbol: Callable[[np.ndarray], np.ndarray], pad: int = SPECTRAL_PAD
) -> GridFunction:
    """``F^-1(symbol(xi) F f)`` on the padded grid; ``symbol`` must be even in ``xi``."""
    g = extend(f, pad)
    z = np.fft.ifft(symbol(_frequencies(g.grid)) * np.fft.fft(g.values))
    return GridFunction(g.grid, _real_part(z, "multiplier"))


def _apply_multiplier(f: GridFunction, symbol_power: float, pad: int) -> GridFunction:
    return fourier_multiplier(f, lambda xi: np.abs(xi) ** symbol_power, pad)


def quarter_laplacian(f: GridFunction, pad: int = SPECTRAL_PAD) -> GridFunction:
    """``F^-1(|xi|^(1/2) F f)``.

    The result is not compactly supported, so it is returned on the padded
    grid ``[-pad L, pad L)``; with that choice its discrete L^2 norm equals
    :func:`seminorm_fourier_sq` to rounding.
    """
    return _apply_multiplier(f, 0.5, pad)


def half_laplacian(f: GridFunction, pad: int = SPECTRAL_PAD) -> GridFunction:
    """``(-Delta)^(1/2) f`` restricted to the grid of ``f``.

    This is the L^2 gradient of the quadratic form: ``seminorm_fourier_sq(f)
    == f.inner(half_laplacian(f))`` and its gradient is ``2 * half_laplacian(f)``.
    """
    return restrict(_apply_multiplier(f, 1.0, pad), f.grid)


def seminorm_fourier_sq(f: GridFunction, pad: int = SPECTRAL_PAD) -> float:
    """``||(-Delta)^(1/4) f||^2 = sum |xi_j| |Ff(xi_j)|^2 dxi`` on the padded spectrum."""
    s = to_spectral(f, pad)
    return s.energy(np.abs(s.frequencies))


def seminorm_gagliardo_sq(f: GridFunction) -> float:
    """``[f]^2 / (2 pi)`` from the Gagliardo double integral.

    Product trapezoid rule over node cells of width ``h``.  Off-diagonal
    cells use the integrand at the nodes; diagonal cells, where the
    integrand tends to ``f'(x)^2``, use the mean of the two adjacent squared
    slopes.  The region with one point outside the cell cover
    ``[-L - h/2, L - h/2)`` is integrated in closed form.
    """
    u = f.values
    n, h = f.grid.n, f.grid.h
    total = 0.0
    for d in range(1, n):
        diff = u[d:] - u[:-d]
        total += float(np.dot(diff, diff)) / (d * d)
    total *= 2.0
    slopes_sq = np.diff(np.concatenate(([0.0], u, [0.0]))) ** 2
    total += 0.5 * float(np.sum(slopes_sq[:-1] + slopes_sq[1:]))
    x = f.grid.nodes
    L = f.grid.L
    far = 1.0 / (L - 0.5 * h - x) + 1.0 / (x + L + 0.5 * h)
    total += 2.0 * h * float(np.dot(u * u, far))
    return total / (2.0 * math.pi)


def h12_norm_sq(f: GridFunction, pad: int = SPECTRAL_PAD) -> float:
    return seminorm_fourier_sq(f, pad) + l2_norm_sq(f)


def _mass_outside(f: GridFunction, radius: float) -> bool:
    v = np.abs(f.values)
    top = v.max() if v.size else 0.0
    if top == 0.0:
        return False
    return bool(np.any(v[np.abs(f.grid.nodes) > radius] > NEGLIGIBLE * top))


def dilate(
    f: GridFunction | Profile,
    lam: float,
    grid: Grid | None = None,
    method: str = "linear",
) -> GridFunction:
    """Samples of ``x -> f(lam x)``.

    Closed-form profiles are re-evaluated exactly on ``grid``.  Grid
    functions are resampled by linear interpolation (``method="linear"``),
    or, with ``method="regrid"``, keep their values and move to the grid of
    half width ``L / lam``, which makes the scaling laws hold exactly.
    """
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    if not isinstance(f, GridFunction):
        if grid is None:
            raise ValueError("dilating a closed-form profile needs a target grid")
        out = sample(grid, lambda x: f(lam * x))
        radius = extent_of(f) / lam
        if math.isfinite(radius):
            leaks = radius > grid.L
        else:
            # unbounded support: look at what is left at the window edge
            edge = np.abs(f(lam * np.array([-grid.L, grid.L])))
            top = float(np.max(np.abs(out.values))) if grid.n else 0.0
            leaks = bool(np.any(edge > NEGLIGIBLE * max(top, 1e-300)))
        if leaks:
            warnings.warn(
                f"dilated profile extends past L={grid.L}", DilationWarning, stacklevel=2
            )
        return out
    if method == "regrid":
        return GridFunction(Grid(f.grid.L / lam, f.grid.n), f.values)
    if method != "linear":
        raise ValueError(f"unknown dilation method {method!r}")
    if grid is not None and grid != f.grid:
        raise GridError("linear dilation keeps the grid of its input")
    g = f.grid
    if lam < 1 and _mass_outside(f, lam * g.L):
        warnings.warn(
            f"dilation by {lam:.4g} moves mass past the truncation boundary L={g.L}",
            DilationWarning,
            stacklevel=2,
        )
    xp = np.append(g.nodes, g.L)
    fp = np.append(f.values, 0.0)
    return GridFunction(g, np.interp(lam * g.nodes, xp, fp, left=0.0, right=0.0))


def support_radius(f: GridFunction) -> float:
    """Largest ``|x_k|`` at which ``f`` carries non-negligible mass."""
    v = np.abs(f.values)
    if not v.size or v.max() == 0.0:
        return 0.0
    idx = np.nonzero(v > NEGLIGIBLE * v.max())[0]
    return float(np.max(np.abs(f.grid.nodes[idx])))

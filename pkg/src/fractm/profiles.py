"""Closed-form profiles that can be sampled on a grid.

A profile is any callable mapping an array of positions to an array of
values.  The classes here additionally expose ``extent``: the largest
``|x|`` at which the profile can be nonzero (``inf`` for Gaussians).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

Profile = Callable[[np.ndarray], np.ndarray]


def extent_of(profile: Profile) -> float:
    return float(getattr(profile, "extent", math.inf))


@dataclass(frozen=True)
class Zero:
    extent: float = 0.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Gaussian:
    """``exp(-a (x - center)**2)``."""

    a: float = 1.0
    center: float = 0.0

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise ValueError(f"Gaussian rate must be positive, got {self.a}")

    @property
    def extent(self) -> float:
        return math.inf

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.exp(-self.a * (x - self.center) ** 2)


@dataclass(frozen=True)
class Indicator:
    """Indicator of the closed interval ``[lo, hi]``."""

    lo: float = -1.0
    hi: float = 1.0

    @property
    def extent(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return ((x >= self.lo) & (x <= self.hi)).astype(float)


@dataclass(frozen=True)
class Hat:
    """Piecewise-linear tent of height 1 on ``[center - w, center + w]``."""

    center: float = 0.0
    half_width: float = 1.0

    @property
    def extent(self) -> float:
        return abs(self.center) + self.half_width

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.maximum(0.0, 1.0 - np.abs(x - self.center) / self.half_width)


@dataclass(frozen=True)
class Bump:
    """Smooth compactly supported bump, ``exp(1 - 1/(1 - r**2))`` with peak 1."""

    center: float = 0.0
    radius: float = 1.0

    @property
    def extent(self) -> float:
        return abs(self.center) + self.radius

    def __call__(self, x: np.ndarray) -> np.ndarray:
        r = (np.asarray(x, dtype=float) - self.center) / self.radius
        out = np.zeros_like(r)
        inside = np.abs(r) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
        return out


@dataclass(frozen=True)
class Translated:
    profile: Profile
    shift: float

    @property
    def extent(self) -> float:
        return extent_of(self.profile) + abs(self.shift)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.profile(np.asarray(x, dtype=float) - self.shift)


@dataclass(frozen=True)
class TwoBump:
    """``psi(x - shift) + psi(x + shift)``; even whenever ``psi`` is."""

    shift: float
    psi: Profile = Bump()

    @property
    def extent(self) -> float:
        return extent_of(self.psi) + abs(self.shift)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.psi(x - self.shift) + self.psi(x + self.shift)


@dataclass(frozen=True)
class Dilated:
    """``x -> profile(lam * x)``, evaluated exactly."""

    profile: Profile
    lam: float

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"dilation factor must be positive, got {self.lam}")

    @property
    def extent(self) -> float:
        return extent_of(self.profile) / self.lam

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.profile(self.lam * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Mixture:
    """Weighted sum of profiles."""

    terms: tuple[tuple[float, Profile], ...]

    @property
    def extent(self) -> float:
        return max((extent_of(p) for _, p in self.terms), default=0.0)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for weight, profile in self.terms:
            out = out + weight * profile(x)
        return out


def random_bump_mixture(
    rng: np.random.Generator,
    n_bumps: int = 4,
    spread: float = 6.0,
    radii: tuple[float, float] = (0.5, 2.0),
    signed: bool = False,
) -> Mixture:
    """Random sum of smooth bumps with centers in ``[-spread, spread]``."""
    terms = []
    for _ in range(n_bumps):
        amp = rng.uniform(0.2, 1.0)
        if signed and rng.random() < 0.5:
            amp = -amp
        terms.append(
            (float(amp), Bump(float(rng.uniform(-spread, spread)), float(rng.uniform(*radii))))
        )
    return Mixture(tuple(terms))


def smooth_suite() -> Sequence[tuple[str, Profile]]:
    """Smooth, rapidly decaying fixtures used for dual-path consistency checks."""
    return (
        ("gaussian(1)", Gaussian(1.0)),
        ("gaussian(1/4)", Gaussian(0.25)),
        ("bump(r=2)", Bump(0.0, 2.0)),
        ("bump(c=1.5,r=1)", Bump(1.5, 1.0)),
        ("two_bump(3)", TwoBump(3.0, Bump(0.0, 1.5))),
    )

"""Exponential integrands and the Trudinger-Moser type functionals.

Five functionals are supported, selected by :class:`Kind`:

``ADACHI_TANAKA``             ``int (e^{a u^2} - 1) / ||u||_2^2``
``ADACHI_TANAKA_NORMALIZED``  ``int (e^{a u^2} - 1)`` (for ``||u||_2 = 1``)
``LI_RUF``                    ``int (e^{a u^2} - 1)`` (for ``||u||_{H^{1/2}} <= 1``)
``DONG_LU_E``                 ``int u^2 e^{a u^2} / ||u||_2^2``
``DONG_LU_F``                 ``int u^2 e^{b u^2}`` (for ``||u||_{H^{1/2}} <= 1``)

Constraints are never enforced here; :func:`evaluate` reports them as
signed residuals so callers can decide what is admissible.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintError, ExponentOverflowError, ResolutionError
from .function_space import (
    GridFunction,
    dilate,
    h12_norm_sq,
    l2_norm_sq,
    seminorm_fourier_sq,
    support_radius,
)

#: largest exponent accepted before exp overflows double precision
EXP_GUARD = 700.0
#: nodes that a compressed profile must still span (see transport)
MIN_NODES_ACROSS = 32


@dataclass(frozen=True)
class Exponent:
    alpha: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"exponent must be positive and finite, got {self.alpha}")

    @property
    def ratio(self) -> float:
        """``alpha / pi``."""
        return self.alpha / math.pi

    @property
    def regime(self) -> str:
        if math.isclose(self.alpha, math.pi, rel_tol=1e-12):
            return "critical"
        return "subcritical" if self.alpha < math.pi else "supercritical"

    @property
    def is_subcritical(self) -> bool:
        return self.regime == "subcritical"


def as_exponent(alpha: float | Exponent) -> Exponent:
    return alpha if isinstance(alpha, Exponent) else Exponent(float(alpha))


class Kind(enum.Enum):
    ADACHI_TANAKA = "A"
    ADACHI_TANAKA_NORMALIZED = "A_tilde"
    LI_RUF = "B"
    DONG_LU_E = "E"
    DONG_LU_F = "F"

    @property
    def is_ratio(self) -> bool:
        return self in (Kind.ADACHI_TANAKA, Kind.DONG_LU_E)


@dataclass(frozen=True)
class FunctionalSpec:
    kind: Kind
    exponent: Exponent

    @classmethod
    def of(cls, kind: Kind | str, alpha: float | Exponent) -> "FunctionalSpec":
        kind = kind if isinstance(kind, Kind) else Kind(kind)
        return cls(kind, as_exponent(alpha))

    @property
    def alpha(self) -> float:
        return self.exponent.alpha


@dataclass(frozen=True)
class FunctionalValue:
    value: float
    numerator: float
    denominator: float
    constraint_residuals: dict[str, float] = field(default_factory=dict)
    regime: str = "subcritical"


def _exponent_arg(t: np.ndarray | float, alpha: float) -> np.ndarray:
    arg = alpha * np.square(np.asarray(t, dtype=float))
    if arg.size and float(np.max(arg)) > EXP_GUARD:
        raise ExponentOverflowError(
            f"alpha*t^2 = {float(np.max(arg)):.6g} exceeds the guard {EXP_GUARD}"
        )
    return arg


def phi_alpha(t: np.ndarray | float, alpha: float | Exponent) -> np.ndarray | float:
    """``e^{alpha t^2} - 1``."""
    a = as_exponent(alpha).alpha
    out = np.expm1(_exponent_arg(t, a))
    return float(out) if np.ndim(out) == 0 else out


def psi_alpha(t: np.ndarray | float, alpha: float | Exponent) -> np.ndarray | float:
    """``e^{alpha t^2} - 1 - alpha t^2``, computed as ``phi_alpha - alpha t^2``."""
    a = as_exponent(alpha).alpha
    arg = _exponent_arg(t, a)
    out = np.expm1(arg) - arg
    return float(out) if np.ndim(out) == 0 else out


def psi_alpha_prime(t: np.ndarray | float, alpha: float | Exponent) -> np.ndarray | float:
    """Derivative of :func:`psi_alpha`: ``2 alpha t phi_alpha(t)``."""
    a = as_exponent(alpha).alpha
    t = np.asarray(t, dtype=float)
    out = 2.0 * a * t * np.expm1(_exponent_arg(t, a))
    return float(out) if np.ndim(out) == 0 else out


def tm_integral(f: GridFunction, alpha: float | Exponent) -> float:
    """Trapezoid value of ``int (e^{alpha f^2} - 1) dx``."""
    return f.grid.h * float(np.sum(phi_alpha(f.values, alpha)))


def psi_integral(f: GridFunction, alpha: float | Exponent) -> float:
    return f.grid.h * float(np.sum(psi_alpha(f.values, alpha)))


def weighted_exp_integral(f: GridFunction, alpha: float | Exponent) -> float:
    """Trapezoid value of ``int f^2 e^{alpha f^2} dx``."""
    a = as_exponent(alpha).alpha
    u = f.values
    return f.grid.h * float(np.sum(u * u * np.exp(_exponent_arg(u, a))))


def evaluate(spec: FunctionalSpec, f: GridFunction) -> FunctionalValue:
    kind, alpha = spec.kind, spec.alpha
    l2 = l2_norm_sq(f)
    if kind.is_ratio and l2 == 0.0:
        raise ConstraintError(f"{kind.name} is a ratio and needs a nonzero function")
    semi = seminorm_fourier_sq(f)
    residuals: dict[str, float] = {}
    if kind in (Kind.ADACHI_TANAKA, Kind.ADACHI_TANAKA_NORMALIZED, Kind.DONG_LU_E):
        residuals["seminorm-1"] = semi - 1.0
    if kind is Kind.ADACHI_TANAKA_NORMALIZED:
        residuals["l2-1"] = l2 - 1.0
    if kind in (Kind.LI_RUF, Kind.DONG_LU_F):
        residuals["h12-1"] = semi + l2 - 1.0

    if kind in (Kind.DONG_LU_E, Kind.DONG_LU_F):
        num = weighted_exp_integral(f, alpha)
    else:
        num = tm_integral(f, alpha)
    den = l2 if kind.is_ratio else 1.0
    return FunctionalValue(num / den, num, den, residuals, spec.exponent.regime)


def normalize_adachi(f: GridFunction, method: str = "linear") -> GridFunction:
    """Dilate ``f`` by ``lam = ||f||_2^2`` so that the result has unit L^2 norm.

    The dilation leaves the seminorm unchanged, so the Adachi-Tanaka ratio
    of ``f`` becomes the plain exponential integral of the result.
    """
    lam = l2_norm_sq(f)
    if lam == 0.0:
        raise ConstraintError("cannot normalize the zero function")
    if lam == 1.0:
        return f
    return dilate(f, lam, method=method)


def transport(
    f: GridFunction,
    alpha: float | Exponent,
    beta: float = math.pi,
    method: str = "linear",
    admissibility_tol: float = 5e-3,
) -> GridFunction:
    """``v(x) = C f(lam x)`` with ``C^2 = alpha/beta`` and ``lam = C^2/(1 - C^2)``.

    For ``f`` with seminorm at most 1 and unit L^2 norm, ``v`` lies in the
    unit ball of the full H^(1/2) norm and
    ``int (e^{beta v^2} - 1) = ((1 - C^2)/C^2) int (e^{alpha f^2} - 1)``.
    """
    a = as_exponent(alpha).alpha
    if not 0 < a < beta:
        raise ConstraintError(f"need 0 < alpha < beta, got alpha={a}, beta={beta}")
    semi, l2 = seminorm_fourier_sq(f), l2_norm_sq(f)
    if semi > 1.0 + admissibility_tol or abs(l2 - 1.0) > admissibility_tol:
        raise ConstraintError(
            f"input not admissible: seminorm={semi:.6g}, l2={l2:.6g} (tol {admissibility_tol})"
        )
    c2 = a / beta
    lam = c2 / (1.0 - c2)
    if method == "linear" and lam > 1.0:
        # compression: the image must still span enough nodes
        width = support_radius(f) / lam
        if width < MIN_NODES_ACROSS * f.grid.h:
            raise ResolutionError(
                f"dilation by {lam:.4g} compresses the profile to radius {width:.3g},"
                f" fewer than {MIN_NODES_ACROSS} nodes; alpha too close to beta for this grid"
            )
    return math.sqrt(c2) * dilate(f, lam, method=method)


def transport_to_B(
    f: GridFunction, alpha: float | Exponent, method: str = "linear"
) -> GridFunction:
    """Map an admissible function for the normalized Adachi-Tanaka problem into the Li-Ruf ball."""
    return transport(f, alpha, math.pi, method=method)


def transport_factor(alpha: float | Exponent, beta: float = math.pi) -> float:
    """``(1 - alpha/beta) / (alpha/beta)``."""
    t = as_exponent(alpha).alpha / beta
    return (1.0 - t) / t


def relation_bound(alpha: float | Exponent, a_value: float) -> float:
    """Lower bound for B(pi) implied by a lower bound ``a_value`` for A(alpha)."""
    a = as_exponent(alpha).alpha
    if not 0 < a < math.pi:
        raise ValueError(f"alpha must lie in (0, pi), got {a}")
    if a_value < 0:
        raise ValueError("a_value must be nonnegative")
    return transport_factor(a) * a_value


def dong_lu_bound(alpha: float, beta: float, f_value: float) -> float:
    """Upper bound ``F(beta) / (1 - alpha/beta)`` for E(alpha), ``0 < alpha < beta < pi``."""
    if not 0 < alpha < beta < math.pi:
        raise ValueError("need 0 < alpha < beta < pi")
    return f_value / (1.0 - alpha / beta)

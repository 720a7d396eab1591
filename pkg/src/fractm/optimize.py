"""Constrained ascent for the normalized functionals, plus GN and orbit diagnostics.

The ascent maximizes ``int (e^{a u^2} - 1)`` (or ``int u^2 e^{a u^2}``) over
``{[u]^2 = 1, ||u||_2^2 = 1}``; by dilation invariance this value equals the
supremum of the corresponding ratio over ``[u]^2 <= 1``.  Each step takes a
preconditioned gradient, removes its normal components and maps the trial
point back onto the constraint set exactly (see ``_Retraction``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConstraintError, ExponentOverflowError, OptimizationError, SeriesTruncationError
from .function_space import (
    SPECTRAL_PAD,
    Grid,
    GridFunction,
    _mass_outside,
    dilate,
    h12_norm_sq,
    half_laplacian,
    l2_norm_sq,
    lp_norm,
    sample,
    seminorm_fourier_sq,
)
from .functionals import (
    Exponent,
    FunctionalSpec,
    Kind,
    _exponent_arg,
    as_exponent,
    evaluate,
    normalize_adachi,
    tm_integral,
)
from .moser import Moser
from .profiles import Gaussian, Profile
from .rearrangement import rearrange

#: plateau cells required for a Moser start
MOSER_START_CELLS = 8
RATIO_KINDS = (Kind.ADACHI_TANAKA_NORMALIZED, Kind.DONG_LU_E)


@dataclass(frozen=True)
class StepRule:
    """Backtracking (Armijo) line search parameters."""

    initial: float = 1.0
    shrink: float = 0.5
    sufficient_increase: float = 1e-4
    grow: float = 2.0
    min_step: float = 1e-14

    def __post_init__(self) -> None:
        if not (self.initial > 0 and 0 < self.shrink < 1 and 0 <= self.sufficient_increase < 1):
            raise ValueError("invalid step rule")
        if self.grow < 1 or not self.min_step > 0:
            raise ValueError("invalid step rule")


Start = Profile | GridFunction


def default_starts(grid: Grid) -> tuple[Start, ...]:
    """Gaussians ``e^{-a x^2}``, ``a in {1/4, 1, 4}``, and Moser profiles ``eps in {e^-2, e^-4}``.

    The Moser starts get a support radius wide enough that their plateau
    spans ``MOSER_START_CELLS`` nodes.
    """
    starts: list[Start] = [Gaussian(0.25), Gaussian(1.0), Gaussian(4.0)]
    for eps in (math.exp(-2.0), math.exp(-4.0)):
        radius = max(1.0, MOSER_START_CELLS * grid.h / eps)
        if radius < 0.5 * grid.L:
            starts.append(Moser(eps, radius))
    return tuple(starts)


@dataclass(frozen=True)
class MaximizeConfig:
    alpha: Exponent
    grid: Grid
    max_iters: int = 5000
    tol: float = 1e-8
    step: StepRule = StepRule()
    starts: tuple[Start, ...] | None = None
    rearrange_every: int = 25
    patience: int = 5

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", as_exponent(self.alpha))
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1 or self.patience < 1 or self.rearrange_every < 0:
            raise ValueError("max_iters and patience must be >= 1, rearrange_every >= 0")
        if self.starts is not None and len(self.starts) == 0:
            raise ValueError("need at least one start")

    def resolved_starts(self) -> tuple[Start, ...]:
        return default_starts(self.grid) if self.starts is None else tuple(self.starts)


@dataclass
class StartTrace:
    index: int
    iterations: list[int] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    residuals: list[tuple[float, float]] = field(default_factory=list)
    #: (iteration, numerator gap, seminorm drop, accepted) per rearrangement step
    rearrangements: list[tuple[int, float, float, bool]] = field(default_factory=list)
    status: str = "iter_cap"
    reason: str = ""
    final_value: float = float("nan")


@dataclass(frozen=True)
class MaximizerReport:
    best_value: float
    best_function: GridFunction
    constraint_residuals: dict[str, float]
    traces: tuple[StartTrace, ...]
    status: str
    best_start: int
    spec: FunctionalSpec


class _Operators:
    """``(-Delta)^(1/2)`` and the preconditioner ``(1 + |xi|)^-1`` on raw arrays.

    Same centred zero padding as :func:`half_laplacian`, with real FFTs.
    """

    def __init__(self, grid: Grid, pad: int = SPECTRAL_PAD):
        self.n, self.h = grid.n, grid.h
        self.m = grid.n * pad
        self.off = (self.m - grid.n) // 2
        xi = 2.0 * np.pi * np.fft.rfftfreq(self.m, d=grid.h)
        self.k_sym = xi
        self.m_sym = 1.0 / (1.0 + xi)

    def _apply(self, v: np.ndarray, sym: np.ndarray) -> np.ndarray:
        buf = np.zeros(self.m)
        buf[self.off : self.off + self.n] = v
        return np.fft.irfft(sym * np.fft.rfft(buf), self.m)[self.off : self.off + self.n]

    def K(self, v: np.ndarray) -> np.ndarray:
        return self._apply(v, self.k_sym)

    def precondition(self, v: np.ndarray) -> np.ndarray:
        return self._apply(v, self.m_sym)


class _Retraction:
    """Map ``v`` onto ``{[w]^2 = ||w||^2 = 1}`` along ``w = v + r K v``, then rescale.

    ``[w]^2 - ||w||^2`` is quadratic in ``r``; the smallest root makes both
    norms equal and the final rescaling sets them to 1.
    """

    def __init__(self, ops: _Operators):
        self.ops = ops

    def __call__(self, v: np.ndarray) -> np.ndarray | None:
        h, K = self.ops.h, self.ops.K
        k = K(v)
        s_vv = h * float(v @ k)
        l_vv = h * float(v @ v)
        s_vk = h * float(k @ k)
        s_kk = h * float(k @ K(k))
        qa = s_kk - s_vk
        qb = 2.0 * (s_vk - s_vv)
        qc = s_vv - l_vv
        if abs(qa) < 1e-300:
            if qb == 0.0:
                return None
            r = -qc / qb
        else:
            disc = qb * qb - 4.0 * qa * qc
            if disc < 0:
                return None
            sq = math.sqrt(disc)
            roots = ((-qb + sq) / (2 * qa), (-qb - sq) / (2 * qa))
            r = min(roots, key=abs)
        w = v + r * k
        nrm = h * float(w @ w)
        if not nrm > 0:
            return None
        return w / math.sqrt(nrm)


def _numerator(kind: Kind, alpha: float, v: np.ndarray, h: float) -> float:
    arg = _exponent_arg(v, alpha)
    if kind is Kind.DONG_LU_E or kind is Kind.DONG_LU_F:
        return h * float(np.sum(v * v * np.exp(arg)))
    return h * float(np.sum(np.expm1(arg)))


def _numerator_grad(kind: Kind, alpha: float, v: np.ndarray) -> np.ndarray:
    arg = _exponent_arg(v, alpha)
    if kind is Kind.DONG_LU_E or kind is Kind.DONG_LU_F:
        return 2.0 * v * np.exp(arg) * (1.0 + arg)
    return 2.0 * alpha * v * np.exp(arg)


def _initial_point(start: Start, grid: Grid, ops: _Operators, retract: _Retraction) -> np.ndarray:
    f = start if isinstance(start, GridFunction) else sample(grid, start)
    if f.grid != grid:
        raise ConstraintError("warm start lives on a different grid")
    if f.is_zero():
        raise ConstraintError("start is the zero function")
    f = f / math.sqrt(seminorm_fourier_sq(f))
    if abs(l2_norm_sq(f) - 1.0) > 1e-8:  # warm starts are already normalized
        f = normalize_adachi(f)
    w = retract(np.asarray(f.values))
    if w is None:
        raise ConstraintError("start could not be mapped onto the constraint set")
    return w


def _ascend(spec: FunctionalSpec, config: MaximizeConfig, start: Start, index: int):
    grid, rule = config.grid, config.step
    ops = _Operators(grid)
    retract = _Retraction(ops)
    kind, alpha, h = spec.kind, spec.alpha, grid.h
    trace = StartTrace(index)

    def objective(v: np.ndarray) -> float | None:
        try:
            return _numerator(kind, alpha, v, h)
        except ExponentOverflowError:
            return None

    def record(it: int, v: np.ndarray, fv: float) -> None:
        trace.iterations.append(it)
        trace.objective.append(fv)
        trace.residuals.append((h * float(v @ ops.K(v)) - 1.0, h * float(v @ v) - 1.0))

    u = _initial_point(start, grid, ops, retract)
    f = objective(u)
    if f is None:
        trace.status, trace.reason = "overflow", "start overflows the exponent guard"
        return trace, None
    record(0, u, f)
    t = rule.initial
    small = 0
    for it in range(1, config.max_iters + 1):
        if config.rearrange_every and it % config.rearrange_every == 0:
            u, f = _rearrange_step(u, f, it, grid, ops, retract, objective, trace)
        g = _numerator_grad(kind, alpha, u)
        pg = ops.precondition(g)
        normals = [2.0 * ops.K(u), 2.0 * u]
        pre = [ops.precondition(c) for c in normals]
        gram = np.array([[c @ p for p in pre] for c in normals])
        rhs = np.array([c @ pg for c in normals])
        coef = np.linalg.solve(gram, rhs)
        d = pg - coef[0] * pre[0] - coef[1] * pre[1]
        slope = h * float(g @ d)
        if not slope > 0:
            trace.status, trace.reason = "converged", "no ascent direction"
            break
        while True:
            w = retract(u + t * d)
            fw = objective(w) if w is not None else None
            if fw is not None and fw > f and fw >= f + rule.sufficient_increase * t * slope:
                break
            t *= rule.shrink
            if t < rule.min_step:
                w = None
                break
        if w is None:
            trace.status, trace.reason = "converged", "line search stalled"
            break
        rel = (fw - f) / abs(f)
        u, f = w, fw
        record(it, u, f)
        t = min(t * rule.grow, rule.initial)
        small = small + 1 if rel < config.tol else 0
        if small >= config.patience:
            trace.status, trace.reason = "converged", "relative change below tol"
            break
    else:
        trace.status, trace.reason = "iter_cap", "max_iters reached"
    trace.final_value = f
    return trace, u


def _rearrange_step(u, f, it, grid, ops, retract, objective, trace):
    """Replace ``u`` by its rearrangement when that does not lower the objective."""
    h = grid.h
    r = rearrange(GridFunction(grid, u)).values
    num_gap = abs((objective(r) or math.inf) - f) / abs(f)
    drop = h * float(u @ ops.K(u)) - h * float(r @ ops.K(r))
    w = retract(r)
    fw = objective(w) if w is not None else None
    ok = fw is not None and fw >= f and drop >= -1e-6
    trace.rearrangements.append((it, num_gap, drop, ok))
    return (w, fw) if ok else (u, f)


def maximize(spec: FunctionalSpec, config: MaximizeConfig) -> MaximizerReport:
    """Multi-start projected ascent; returns the best start (ties go to the lower index)."""
    if spec.kind not in RATIO_KINDS:
        raise ValueError(f"maximize supports {[k.value for k in RATIO_KINDS]}, got {spec.kind.value}")
    if not spec.exponent.is_subcritical:
        raise ValueError("maximize needs 0 < alpha < pi")
    traces: list[StartTrace] = []
    best: tuple[float, int, np.ndarray] | None = None
    errors: list[str] = []
    for i, start in enumerate(config.resolved_starts()):
        try:
            trace, u = _ascend(spec, config, start, i)
        except ConstraintError as exc:
            trace, u = StartTrace(i, status="failed", reason=str(exc)), None
        traces.append(trace)
        if u is None:
            errors.append(trace.status)
            continue
        if best is None or trace.final_value > best[0]:
            best = (trace.final_value, i, u)
    if best is None:
        if errors and all(s == "overflow" for s in errors):
            raise ExponentOverflowError("every start overflowed; alpha too close to pi for this grid")
        raise OptimizationError("all starts failed: " + "; ".join(t.reason for t in traces))
    _, idx, u = best
    fn = GridFunction(config.grid, u)
    val = evaluate(spec, fn)
    return MaximizerReport(
        best_value=val.value,
        best_function=fn,
        constraint_residuals=dict(val.constraint_residuals),
        traces=tuple(traces),
        status=traces[idx].status,
        best_start=idx,
        spec=spec,
    )


def functional_gradient(f: GridFunction, spec: FunctionalSpec) -> GridFunction:
    """L^2-metric gradient: ``d/dt J(f + t d) = functional_gradient(f).inner(d)``."""
    kind, alpha = spec.kind, spec.alpha
    u = np.asarray(f.values)
    num_grad = _numerator_grad(kind, alpha, u)
    if not kind.is_ratio:
        return GridFunction(f.grid, num_grad)
    den = l2_norm_sq(f)
    if den == 0.0:
        raise ConstraintError("gradient of a ratio functional at the zero function")
    num = _numerator(kind, alpha, u, f.grid.h)
    return GridFunction(f.grid, num_grad / den - 2.0 * num * u / den**2)


def constraint_normals(f: GridFunction, kind: Kind) -> list[GridFunction]:
    """L^2 gradients of the active constraints of ``kind`` at ``f``."""
    k = 2.0 * half_laplacian(f)
    if kind in (Kind.ADACHI_TANAKA, Kind.DONG_LU_E):
        return [k]
    if kind is Kind.ADACHI_TANAKA_NORMALIZED:
        return [k, 2.0 * f]
    return [k + 2.0 * f]


def tangential_component(f: GridFunction, spec: FunctionalSpec) -> tuple[GridFunction, float]:
    """Part of the gradient tangent to the constraint set and its norm relative to the gradient."""
    g = functional_gradient(f, spec)
    normals = constraint_normals(f, spec.kind)
    gram = np.array([[a.inner(b) for b in normals] for a in normals])
    rhs = np.array([a.inner(g) for a in normals])
    coef = np.linalg.lstsq(gram, rhs, rcond=None)[0]
    t = g
    for c, nv in zip(coef, normals):
        t = t - float(c) * nv
    gn = math.sqrt(g.inner(g))
    return t, (math.sqrt(t.inner(t)) / gn if gn > 0 else 0.0)


def gn_ratio(f: GridFunction, q: float) -> float:
    """``||u||_q / (q^(1/2) [u]^(1 - 2/q) ||u||_2^(2/q))`` with ``[u]`` the spectral seminorm."""
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    if f.is_zero():
        raise ConstraintError("GN ratio of the zero function")
    s = seminorm_fourier_sq(f)
    l2 = l2_norm_sq(f)
    return lp_norm(f, q) / (math.sqrt(q) * s ** (0.5 * (1.0 - 2.0 / q)) * l2 ** (1.0 / q))


BETA0 = 1.0 / math.sqrt(2.0 * math.pi * math.e)


def ogawa_ozawa_ratio(f: GridFunction, p: int) -> float:
    """``||u||_p^p / (p^(p/2) [u]^(p-2) ||u||_2^2)``."""
    if f.is_zero():
        raise ConstraintError("Ogawa-Ozawa ratio of the zero function")
    s = seminorm_fourier_sq(f)
    return lp_norm(f, p) ** p / (p ** (0.5 * p) * s ** (0.5 * (p - 2)) * l2_norm_sq(f))


def ogawa_ozawa_constant(fixtures: Sequence[GridFunction], ps: Sequence[int]) -> float:
    """Smallest constant consistent with every (fixture, p) pair."""
    if not fixtures or not ps:
        raise ValueError("need at least one fixture and one exponent")
    for p in ps:
        if int(p) != p or p < 4 or p % 2:
            raise ValueError(f"p must be an even integer >= 4, got {p}")
    return max(ogawa_ozawa_ratio(f, int(p)) for f in fixtures for p in ps)


# -- dilation orbit on the unit sphere of the full norm ---------------------

M_TOL = 1e-6


def normalize_to_M(f: GridFunction) -> GridFunction:
    """``f / ||f||_{H^(1/2)}``."""
    if f.is_zero():
        raise ConstraintError("cannot normalize the zero function")
    return f / math.sqrt(h12_norm_sq(f))


@dataclass(frozen=True)
class OrbitPoint:
    tau: float
    v: GridFunction
    a: float
    b: float
    moments: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if abs(self.a + self.b - 1.0) > M_TOL:
            raise ConstraintError(f"a + b = {self.a + self.b:.10g}, not on the unit sphere")


def orbit_point(v: GridFunction, j_max: int) -> OrbitPoint:
    """Seminorm, L^2 norm and even moments ``c_j = ||v||_{2j}^{2j}`` for ``j = 1..j_max``."""
    a, b = seminorm_fourier_sq(v), l2_norm_sq(v)
    top = float(np.max(np.abs(v.values)))
    y = (np.asarray(v.values) / top) ** 2
    moments = []
    p = np.ones_like(y)
    for j in range(1, j_max + 1):
        p = p * y
        moments.append(v.grid.h * float(np.sum(p)) * top ** (2 * j))
    return OrbitPoint(1.0, v, a, b, tuple(moments))


@dataclass(frozen=True)
class OrbitSeries:
    value: float
    tail_bound: float
    terms: tuple[float, ...]


def orbit_derivative_series(
    v: GridFunction,
    alpha: float | Exponent,
    j_max: int = 60,
    rel_tail: float = 1e-10,
    certify: bool = True,
) -> OrbitSeries:
    """``d/dtau J(w_tau)`` at ``tau = 1`` as ``sum_j alpha^j/j! c_j ((j-1) b - a)``.

    The tail after ``j_max`` is bounded with ``c_j <= ||v||_inf^(2j-2) b``;
    consecutive bounds shrink by ``alpha ||v||_inf^2 / j``.  With ``certify``
    the call fails unless that bound is below ``rel_tail`` of the sum.
    """
    al = as_exponent(alpha).alpha
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    pt = orbit_point(v, j_max)
    a, b = pt.a, pt.b
    terms = []
    for j, c in enumerate(pt.moments, start=1):
        coef = math.exp(j * math.log(al) - math.lgamma(j + 1))
        terms.append(coef * c * ((j - 1) * b - a))
    value = math.fsum(terms)
    M2 = float(np.max(np.abs(v.values))) ** 2
    J = j_max
    q = al * M2 / (J + 1)
    if q < 1:
        lead = math.exp((J + 1) * math.log(al) + J * math.log(M2) - math.lgamma(J + 1)) * b
        tail = lead / (1.0 - q)
    else:
        tail = math.inf
    if certify and not tail <= rel_tail * abs(value):
        raise SeriesTruncationError(
            f"tail bound {tail:.3e} exceeds {rel_tail:g} x |sum| = {rel_tail * abs(value):.3e} at j_max={j_max}"
        )
    return OrbitSeries(value, tail, tuple(terms))


def orbit_value(v: GridFunction, alpha: float | Exponent, tau: float, method: str = "regrid") -> float:
    """``J_alpha(w_tau)`` with ``w_tau = v_tau / ||v_tau||`` and ``v_tau(x) = sqrt(tau) v(tau x)``."""
    al = as_exponent(alpha).alpha
    if tau == 1.0:
        return tm_integral(v, al)
    if method == "linear" and tau < 1 and _mass_outside(v, tau * v.grid.L):
        raise ConstraintError(f"dilation by {tau} pushes mass past L={v.grid.L}")
    vt = math.sqrt(tau) * dilate(v, tau, method=method)
    return tm_integral(normalize_to_M(vt), al)


def orbit_derivative_fd(
    v: GridFunction, alpha: float | Exponent, h_tau: float = 1e-3, method: str = "regrid"
) -> float:
    """Central difference of the orbit value across ``tau = 1``."""
    if not 0 < h_tau <= 0.1:
        raise ValueError("h_tau must lie in (0, 0.1]")
    if abs(h12_norm_sq(v) - 1.0) > M_TOL:
        raise ConstraintError("v must lie on the unit sphere of the full norm")
    hi = orbit_value(v, alpha, 1.0 + h_tau, method)
    lo = orbit_value(v, alpha, 1.0 - h_tau, method)
    return (hi - lo) / (2.0 * h_tau)

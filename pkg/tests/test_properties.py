"""Randomized invariants (hypothesis)."""

import math

import numpy as np
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fractm.function_space import (
    Grid,
    GridFunction,
    dilate,
    from_spectral,
    h12_norm_sq,
    l2_norm_sq,
    sample,
    seminorm_fourier_sq,
    support_radius,
    to_spectral,
)
from fractm.functionals import (
    FunctionalSpec,
    evaluate,
    normalize_adachi,
    phi_alpha,
    psi_alpha,
    psi_integral,
    relation_bound,
    tm_integral,
    transport_to_B,
)
from fractm.optimize import functional_gradient, normalize_to_M, orbit_derivative_fd, orbit_derivative_series
from fractm.profiles import random_bump_mixture
from fractm.rearrangement import equimeasurability_check, polya_szego_deficit, radial_bound_check, rearrange

G = Grid(20.0, 2048)
SMALL = Grid(4.0, 64)
PROFILE = settings(max_examples=40, deadline=None)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
alphas = st.floats(min_value=0.05, max_value=3.0)


def mixture(seed, signed=False, grid=G):
    return sample(grid, random_bump_mixture(np.random.default_rng(seed), signed=signed))


def fits_after_dilation(f, lam):
    """Precondition of the dilation identities: the image stays well inside the window."""
    return support_radius(f) / lam < 0.9 * f.grid.L


# raw samples, zero on the outer quarter so nothing touches the boundary
raw = arrays(np.float64, 32, elements=st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)).map(
    lambda a: GridFunction(SMALL, np.concatenate([np.zeros(16), a, np.zeros(16)]))
)


@PROFILE
@given(raw)
def test_parseval_and_round_trip(f):
    s = to_spectral(f)
    l2 = l2_norm_sq(f)
    assert abs(s.energy() - l2) <= 1e-10 * max(l2, 1e-300)
    back = from_spectral(s).values
    assert np.max(np.abs(back - f.values)) <= 1e-12 * max(np.max(np.abs(f.values)), 1e-300)


@PROFILE
@given(raw)
def test_norm_ordering(f):
    s = seminorm_fourier_sq(f)
    assert s >= 0 and h12_norm_sq(f) >= l2_norm_sq(f)


@PROFILE
@given(raw, st.integers(-8, 8))
def test_seminorm_translation_invariant(f, shift):
    moved = GridFunction(SMALL, np.roll(f.values, shift))
    a, b = seminorm_fourier_sq(f), seminorm_fourier_sq(moved)
    assert abs(a - b) <= 1e-10 * max(a, 1e-300)


@PROFILE
@given(seeds, st.floats(0.25, 4.0))
def test_regrid_scaling_exact(seed, lam):
    f = mixture(seed)
    g = dilate(f, lam, method="regrid")
    assert abs(l2_norm_sq(g) - l2_norm_sq(f) / lam) <= 1e-12 * l2_norm_sq(f)
    assert abs(seminorm_fourier_sq(g) - seminorm_fourier_sq(f)) <= 1e-10 * seminorm_fourier_sq(f)


@PROFILE
@given(seeds, st.booleans())
def test_rearrangement_invariants(seed, signed):
    f = mixture(seed, signed)
    r = rearrange(f)
    assert np.array_equal(np.sort(r.values), np.sort(np.abs(f.values)))
    assert np.array_equal(rearrange(r.function).values, r.values)
    assert polya_szego_deficit(f) >= -1e-6
    assert radial_bound_check(r) >= -1e-8


@PROFILE
@given(seeds, st.sampled_from(["square", "quartic", "abs", "phi"]))
def test_equimeasurability_exact(seed, name):
    F = {
        "square": np.square,
        "quartic": lambda t: t**4,
        "abs": np.abs,
        "phi": lambda t: phi_alpha(t, 1.0),
    }[name]
    a, b = equimeasurability_check(mixture(seed, True), F)
    assert a == b


@PROFILE
@given(st.floats(-3, 3), alphas)
def test_integrand_identities(t, a):
    assert phi_alpha(t, a) >= 0 and psi_alpha(t, a) >= 0
    assert abs(psi_alpha(t, a) - (phi_alpha(t, a) - a * t * t)) <= 1e-12 * max(1.0, phi_alpha(t, a))
    # e^{a t^2} - 1 <= a t^2 e^{a t^2}
    assert phi_alpha(t, a) <= a * t * t * math.exp(a * t * t) * (1 + 1e-14) + 1e-300


@PROFILE
@given(seeds, alphas)
def test_psi_split_and_e_dominates_a(seed, a):
    f = mixture(seed)
    f = f / math.sqrt(seminorm_fourier_sq(f))
    lhs = tm_integral(f, a)
    assert abs(lhs - (a * l2_norm_sq(f) + psi_integral(f, a))) <= 1e-10 * lhs
    e = evaluate(FunctionalSpec.of("E", a), f).numerator
    assert a * e >= evaluate(FunctionalSpec.of("A", a), f).numerator


@PROFILE
@given(seeds, alphas, st.floats(0.3, 1.0))
def test_normalization_preserves_ratio(seed, a, s):
    f = mixture(seed)
    f = math.sqrt(s / seminorm_fourier_sq(f)) * f
    assume(fits_after_dilation(f, l2_norm_sq(f)))
    ratio = evaluate(FunctionalSpec.of("A", a), f).value
    assert abs(tm_integral(normalize_adachi(f), a) - ratio) <= 1e-2 * ratio


@PROFILE
@given(seeds, st.sampled_from([0.3, 0.5, 0.7]))
def test_transport_feasible(seed, r):
    f = mixture(seed)
    f = f / math.sqrt(seminorm_fourier_sq(f))
    assume(fits_after_dilation(f, l2_norm_sq(f)))
    f = normalize_adachi(f)
    assume(fits_after_dilation(f, r / (1 - r)))
    v = transport_to_B(f, r * math.pi)
    assert h12_norm_sq(v) <= 1 + 1e-2
    pred = (1 - r) / r * tm_integral(f, r * math.pi)
    assert abs(tm_integral(v, math.pi) - pred) <= 1e-2 * pred


@PROFILE
@given(seeds, seeds, st.sampled_from(["A", "E"]), st.floats(0.1, 2.0))
def test_gradient_matches_finite_difference(seed, dseed, kind, a):
    f = mixture(seed)
    d = mixture(dseed, True)
    spec = FunctionalSpec.of(kind, a)
    eps = 1e-5
    fd = (evaluate(spec, f + eps * d).value - evaluate(spec, f - eps * d).value) / (2 * eps)
    an = functional_gradient(f, spec).inner(d)
    assert abs(an - fd) <= 1e-5 * max(abs(fd), 1e-3)


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(0.05, 1.0))
def test_orbit_series_matches_fd(seed, a):
    v = normalize_to_M(rearrange(mixture(seed)).function)
    s = orbit_derivative_series(v, a).value
    assert abs(s - orbit_derivative_fd(v, a)) <= 1e-4 * abs(s)


@PROFILE
@given(st.floats(0.01, 3.1), st.floats(0, 100), st.floats(0, 100))
def test_relation_bound_monotone(a, x, y):
    lo, hi = sorted((x, y))
    assert relation_bound(a, lo) <= relation_bound(a, hi)

import math

import numpy as np
import pytest

from fractm.errors import ConstraintError
from fractm.function_space import Grid, GridFunction, l2_norm_sq, lp_norm, sample, seminorm_fourier_sq
from fractm.functionals import phi_alpha
from fractm.moser import moser_function
from fractm.profiles import Bump, Gaussian, TwoBump, Zero, random_bump_mixture
from fractm.rearrangement import (
    RearrangedFunction,
    equimeasurability_check,
    placement_order,
    polya_szego_deficit,
    radial_bound_check,
    rearrange,
    strauss_fixture,
)

G = Grid(20.0, 4096)


def test_placement_order_small_grid():
    np.testing.assert_array_equal(placement_order(Grid(1.0, 6)), [3, 2, 4, 1, 5, 0])


class TestRearrange:
    def test_gaussian_fixed_point(self):
        # exact evenness needs the unpaired node -L to hold the minimum
        f = sample(G, Gaussian(1.0))
        np.testing.assert_array_equal(rearrange(f).values[1:], f.values[1:])

    def test_two_bump_becomes_centered(self):
        f = sample(G, TwoBump(5.0, Bump(0.0, 1.0)))
        r = rearrange(f).values
        assert r[G.center] == r.max() == f.values.max()
        assert np.count_nonzero(r) == np.count_nonzero(f.values)
        nz = np.nonzero(r)[0]
        assert nz.max() - nz.min() + 1 == nz.size  # one contiguous bump

    def test_multiset_preserved(self):
        f = sample(G, random_bump_mixture(np.random.default_rng(3), signed=True))
        np.testing.assert_array_equal(np.sort(rearrange(f).values), np.sort(np.abs(f.values)))

    def test_idempotent(self):
        f = sample(G, random_bump_mixture(np.random.default_rng(4)))
        r = rearrange(f).function
        np.testing.assert_array_equal(rearrange(r).values, r.values)

    def test_invariants_enforced(self):
        with pytest.raises(ConstraintError):
            RearrangedFunction(GridFunction(Grid(1.0, 4), [0, 2, 1, 1]))
        with pytest.raises(ConstraintError):
            RearrangedFunction(GridFunction(Grid(1.0, 4), [0, -1, 2, 1]))

    def test_unpaired_node_gets_smallest(self):
        f = sample(G, random_bump_mixture(np.random.default_rng(5), spread=15.0))
        r = rearrange(f).values
        assert r[0] == r.min()


class TestEquimeasurability:
    def test_square(self):
        f = sample(G, TwoBump(3.0, Bump(0.0, 1.5)))
        a, b = equimeasurability_check(f, np.square)
        assert a == b
        assert a == pytest.approx(l2_norm_sq(f), rel=1e-13)

    def test_phi_on_two_bump(self):
        f = sample(G, TwoBump(3.0, Bump(0.0, 1.5)))
        a, b = equimeasurability_check(f, lambda t: phi_alpha(t, 1.0))
        assert abs(a - b) <= 1e-12 * abs(b)

    def test_zero(self):
        assert equimeasurability_check(sample(G, Zero()), np.square) == (0.0, 0.0)


class TestPolyaSzego:
    def test_fixed_point(self):
        assert polya_szego_deficit(sample(G, Gaussian(1.0))) == pytest.approx(0.0, abs=1e-12)

    def test_two_bump_positive(self):
        assert polya_szego_deficit(sample(G, TwoBump(3.0, Bump(0.0, 1.5)))) > 0.1

    def test_zero(self):
        assert polya_szego_deficit(sample(G, Zero())) == 0.0


class TestRadialBound:
    def test_gaussian(self):
        assert radial_bound_check(rearrange(sample(G, Gaussian(1.0)))) >= 0

    def test_zero(self):
        assert radial_bound_check(rearrange(sample(G, Zero()))) == 0.0

    def test_moser_plateau(self):
        f = moser_function(math.exp(-2.0), Grid(2.0, 4096))
        assert radial_bound_check(rearrange(f)) >= 0


class TestStrauss:
    def test_overlap_rejected(self):
        with pytest.raises(ConstraintError):
            strauss_fixture(0.0, Bump(0.0, 1.0), G)

    def test_boundary_rejected(self):
        with pytest.raises(ConstraintError):
            strauss_fixture(19.5, Bump(0.0, 1.0), G)

    def test_unbounded_psi_rejected(self):
        with pytest.raises(ConstraintError):
            strauss_fixture(5.0, Gaussian(1.0), G)

    def test_norm_additivity(self):
        psi = Bump(0.0, 1.0)
        u = strauss_fixture(5.0, psi, G)
        assert lp_norm(u, 4) ** 4 == pytest.approx(2 * lp_norm(sample(G, psi), 4) ** 4, rel=1e-10)

    def test_evenness(self):
        u = strauss_fixture(5.0, Bump(0.0, 1.0), G).values
        np.testing.assert_array_equal(u[1:], u[1:][::-1])

    def test_l2_independent_of_shift_and_rearrangement_concentrates(self):
        psi = Bump(0.0, 1.0)
        norms = [l2_norm_sq(strauss_fixture(s, psi, G)) for s in (2.0, 5.0, 10.0)]
        assert max(norms) - min(norms) <= 1e-12 * norms[0]
        r = rearrange(strauss_fixture(10.0, psi, G)).values
        assert r[G.center] == r.max()
        assert seminorm_fourier_sq(GridFunction(G, r)) < seminorm_fourier_sq(strauss_fixture(10.0, psi, G))

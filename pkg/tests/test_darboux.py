"""
Tests for Darboux pairs, their kernels and first-order isospectrality.
"""
import unittest

import numpy as np
import pytest

from core.errors import InvalidInputError, InvalidPairError, ObstructionError
from core.fields import PeriodicField
from core.lattice import Lattice
from core.quasi import ZERO_EXPONENTS, constant_spinor
from darboux.kernels import (
    BASEPOINT, DIRECT, DUAL, FLOQUET, closedness_defect, deform, deform_dual,
    isospectral_defect, linearized_defect, omega, omega_defect, period_integrals,
    potential_variation,
)
from darboux.pair import PQPotential, build_pair, conformal_pairs, make_pair
from dirac2d.operator import DiracPotential
from dirac2d.spectrum import floquet_function

MU = 0.31 + 0.17j
GRID = 32


def summed_delta_u(pairs):
    first, second = (-potential_variation(pair)[1] for pair in pairs)
    return first + second


def recovered_variation(pair, wave, variation, side):
    """(delta p, delta q) on a grid, solved from the linearized equations of one wave function."""
    pq = pair.pq
    delta = variation.delta_psi
    base = wave.rebase(delta.exponents)
    mu, nu = delta.exponents.mu, delta.exponents.nu
    dbar_first = delta[0].apply_shifted('dzbar', nu).on_grid(GRID)
    d_second = delta[1].apply_shifted('dz', mu).on_grid(GRID)
    first, second = delta[0].on_grid(GRID), delta[1].on_grid(GRID)
    p, q = pq.p.on_grid(GRID), pq.q.on_grid(GRID)
    if side == DIRECT:
        return ((dbar_first - p * second) / base[1].on_grid(GRID),
                (d_second - q * first) / base[0].on_grid(GRID))
    return (-(d_second + p * first) / base[0].on_grid(GRID),
            -(dbar_first + q * second) / base[1].on_grid(GRID))


class TestPairs(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        from fixtures.clifford import clifford_s3
        cls.s3 = clifford_s3()
        cls.pairs = conformal_pairs(cls.s3.potential, cls.s3.Psi, cls.s3.Phi)

    def test_conformal_pairs_are_valid(self):
        for pair in self.pairs:
            self.assertLess(max(pair.residuals()), 1e-12)

    def test_summed_variation_is_flow_derivative(self):
        lattice = self.s3.lattice
        expected = PeriodicField.mode(lattice, 0, 1, amplitude=-0.25) \
            + PeriodicField.mode(lattice, 0, -1, amplitude=-0.25)
        self.assertLess((summed_delta_u(self.pairs) - expected).norm(), 1e-10)

    def test_pq_form(self):
        pq = PQPotential.from_dirac(self.s3.potential)
        self.assertEqual(pq.dirac_defect(self.s3.potential), 0.0)
        self.assertAlmostEqual(pq.q.zero_mode, -(1 + 1j) / 4)

    def test_non_reciprocal_pair_rejected(self):
        phi = floquet_function(self.s3.potential, 0.3 + 0.2j, mode=(0, 0), adjoint=True, cutoff=3)
        with self.assertRaises(InvalidPairError):
            make_pair(self.s3.potential, self.s3.Psi, phi)


class TestKernels(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        from fixtures.clifford import clifford_s3
        cls.s3 = clifford_s3()
        cls.pair = conformal_pairs(cls.s3.potential, cls.s3.Psi, cls.s3.Phi)[0]
        cls.psi = floquet_function(cls.s3.potential, MU, mode=(0, 0), cutoff=4)
        cls.phi = floquet_function(cls.s3.potential, MU, mode=(0, 0), adjoint=True, cutoff=4)

    def test_closedness(self):
        self.assertLess(closedness_defect(self.psi, self.pair), 1e-10)
        self.assertLess(closedness_defect(self.phi, self.pair, side=DUAL), 1e-10)

    def test_floquet_normalized_kernel(self):
        w = omega(self.psi, self.pair)
        self.assertLess(omega_defect(w, self.psi, self.pair), 1e-10)
        kappa = np.array(self.psi.multipliers()) / np.array(self.pair.multipliers)
        z = 0.4 + 0.3j
        for j, g in enumerate(self.s3.lattice.periods):
            np.testing.assert_allclose(w(z + g), kappa[j] * w(z), rtol=1e-10)

    def test_kernel_via_either_derivative(self):
        a = omega(self.psi, self.pair, via='dz')
        b = omega(self.psi, self.pair, via='dzbar')
        self.assertLess((a[0] - b[0]).norm(), 1e-12)

    def test_floquet_kernel_reports_defect(self):
        w = omega(self.psi, self.pair)
        self.assertEqual(w.normalization, FLOQUET)
        self.assertLess(w.defect, 1e-10)
        self.assertLess(omega(self.phi, self.pair, side=DUAL).defect, 1e-10)

    def test_trivial_multipliers_with_zero_periods_fall_back_to_basepoint(self):
        w = omega(self.pair.PsiD, self.pair)
        self.assertEqual(w.normalization, BASEPOINT)
        self.assertLess(w.defect, 1e-12)
        expected = omega(self.pair.PsiD, self.pair, normalization=BASEPOINT)
        self.assertLess((w[0] - expected[0]).norm(), 1e-14)

    def test_nonzero_periods_obstruct(self):
        lattice = Lattice.square()
        free = DiracPotential(PeriodicField.constant(lattice, 0.0))
        spinor = constant_spinor(lattice, ZERO_EXPONENTS, (1.0, 0.0))
        pair = make_pair(free, spinor, spinor)
        with self.assertRaises(ObstructionError):
            omega(spinor, pair)
        np.testing.assert_allclose(period_integrals(spinor, pair), lattice.periods, atol=1e-12)

    def test_basepoint_normalization(self):
        w = omega(self.pair.PsiD, self.pair, normalization=BASEPOINT, c=0.3, z0=0.5 + 0.5j)
        self.assertAlmostEqual(complex(w(0.5 + 0.5j)[0]), 0.3, places=12)
        self.assertLess(omega_defect(w, self.pair.PsiD, self.pair), 1e-12)

    def test_basepoint_needs_trivial_multipliers(self):
        with self.assertRaises(InvalidInputError):
            omega(self.psi, self.pair, normalization=BASEPOINT)

    def test_period_compatibility(self):
        rng = np.random.default_rng(2)
        kappa_hat = self.pair.multipliers
        for _ in range(5):
            mu = complex(rng.uniform(0.2, 0.6), rng.uniform(-0.6, 0.6))
            psi = floquet_function(self.s3.potential, mu, mode=(0, 0), cutoff=3)
            kappa = psi.multipliers()
            I1, I2 = period_integrals(psi, self.pair)
            left = I1 * (kappa[1] / kappa_hat[1] - 1)
            right = I2 * (kappa[0] / kappa_hat[0] - 1)
            assert left == pytest.approx(right, abs=1e-10 * (1 + abs(left)))

    def test_direct_deformation_is_linearized_solution(self):
        w = omega(self.psi, self.pair)
        variation = deform(self.pair, self.psi, w)
        self.assertEqual(variation.delta_psi.exponents, self.psi.exponents)
        self.assertLess(linearized_defect(self.pair, self.psi, variation), 1e-10)

    def test_dual_deformation_is_linearized_solution(self):
        w = omega(self.phi, self.pair, side=DUAL)
        variation = deform_dual(self.pair, self.phi, w)
        self.assertLess(linearized_defect(self.pair, self.phi, variation, side=DUAL), 1e-10)

    def test_basepoint_kernel_is_coordinate_pair(self):
        from weierstrass.surface import coordinate_derivatives, integrate_surface
        torus = integrate_surface(coordinate_derivatives(self.s3.Psi, self.s3.Phi))
        w = omega(self.pair.PsiD, self.pair, normalization=BASEPOINT)
        z = self.s3.lattice.grid(8).ravel()
        x = torus(z)
        np.testing.assert_allclose(w(z)[0], x[2] - 1j * x[3], atol=1e-10)

    def test_both_families_recover_the_same_variation(self):
        pairs = conformal_pairs(self.s3.potential, self.s3.Psi, self.s3.Phi)
        for pair in pairs:
            delta_p, delta_q = potential_variation(pair)
            expected = (delta_p.on_grid(GRID), delta_q.on_grid(GRID))
            direct = deform(pair, self.psi, omega(self.psi, pair))
            dual = deform_dual(pair, self.phi, omega(self.phi, pair, side=DUAL))
            for side, wave, variation in ((DIRECT, self.psi, direct), (DUAL, self.phi, dual)):
                recovered = recovered_variation(pair, wave, variation, side)
                for got, want in zip(recovered, expected):
                    np.testing.assert_allclose(got, want, atol=1e-9 * np.max(np.abs(want)))

    def test_unknown_side(self):
        with self.assertRaises(InvalidInputError):
            closedness_defect(self.psi, self.pair, side='sideways')


class TestIsospectrality(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        from fixtures.clifford import clifford_s3
        cls.s3 = clifford_s3()
        cls.delta_u = summed_delta_u(conformal_pairs(cls.s3.potential, cls.s3.Psi, cls.s3.Phi))

    def ratio(self, variation, eps=1e-3):
        full = isospectral_defect(self.s3.potential, variation, MU, eps, cutoff=12)
        half = isospectral_defect(self.s3.potential, variation, MU, eps / 2, cutoff=12)
        return full / half

    def test_darboux_variation_is_second_order(self):
        self.assertTrue(3.5 <= self.ratio(self.delta_u) <= 4.5)

    def test_control_variation_is_first_order(self):
        lattice = self.s3.lattice
        control = PeriodicField.mode(lattice, 1, 0, amplitude=0.5) \
            + PeriodicField.mode(lattice, -1, 0, amplitude=0.5) + 1.0
        self.assertTrue(1.7 <= self.ratio(control) <= 2.3)

    def test_eps_must_be_positive(self):
        with self.assertRaises(InvalidInputError):
            isospectral_defect(self.s3.potential, self.delta_u, MU, 0.0)


def test_build_pair_from_free_slices():
    free = DiracPotential(PeriodicField.zeros(Lattice.square(), 3))
    mu = 0.3 + 0.2j
    pair = build_pair(free, mu, mu_phi=-mu, mode_psi=(0, 0), mode_phi=(0, 0), cutoff=3)
    expected = (np.exp(2 * np.pi * mu), np.exp(2j * np.pi * mu))
    np.testing.assert_allclose(pair.multipliers, expected, rtol=1e-10)
    assert max(pair.residuals()) < 1e-12


def test_build_pair_rejects_equal_multipliers():
    free = DiracPotential(PeriodicField.zeros(Lattice.square(), 3))
    mu = 0.3 + 0.2j
    with pytest.raises(InvalidPairError):
        build_pair(free, mu, mu_phi=mu, mode_psi=(0, 0), mode_phi=(0, 0), cutoff=3)

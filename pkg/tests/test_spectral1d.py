"""
Tests for Hill and NLS monodromies, resonant points and the 1D reduction.
"""
import unittest

import numpy as np
import pytest
from scipy.linalg import expm

from core.errors import AccuracyError, InvalidInputError, PoleError
from core.fields import PeriodicField
from darboux.kernels import DUAL, omega
from darboux.pair import conformal_pairs
from dirac2d.operator import DiracPotential
from dirac2d.spectrum import floquet_function
from spectral1d.monodromy import (
    PeriodicPotential, discriminant, nls_monodromy, richardson_factor, schrodinger_batch,
    schrodinger_monodromy,
)
from spectral1d.reduction import (
    monodromy_eigenvalues, omega_1d, omega_1d_dual, reduction_crosscheck, y_profile,
)
from spectral1d.resonance import (
    DIAGONALIZABLE, JORDAN, SCAN_HEADER, SIMPLE, classify_root, discriminant_scan,
    resonant_points, write_scan,
)

PERIOD = 2 * np.pi
FREE = PeriodicPotential.zero()
EXPONENTIAL = PeriodicPotential({1: 0.5})
COSINE = PeriodicPotential({1: 0.5, -1: 0.5})


class TestPeriodicPotential(unittest.TestCase):

    def test_fourier_evaluation(self):
        x = np.array([0.0, 1.0, 2.5])
        np.testing.assert_allclose(COSINE(x), np.cos(x), atol=1e-15)
        np.testing.assert_allclose(EXPONENTIAL(x), 0.5 * np.exp(1j * x), atol=1e-15)

    def test_from_samples(self):
        x = PERIOD * np.arange(16) / 16
        u = PeriodicPotential(np.cos(x))
        self.assertTrue(u.is_real())
        self.assertAlmostEqual(u.coefficients[1], 0.5)
        self.assertFalse(EXPONENTIAL.is_real())

    def test_invalid_input(self):
        with self.assertRaises(InvalidInputError):
            PeriodicPotential({}, period=0.0)
        with self.assertRaises(InvalidInputError):
            PeriodicPotential(np.zeros((2, 2)))


class TestHillMonodromy(unittest.TestCase):

    def test_free_discriminant(self):
        energies = np.array([0.3, 1.7, 2.5 + 0.5j])
        expected = 2 * np.cos(PERIOD * np.sqrt(energies))
        np.testing.assert_allclose(discriminant(FREE, PERIOD, energies), expected, atol=1e-9)

    def test_free_resonances(self):
        np.testing.assert_allclose(schrodinger_monodromy(FREE, PERIOD, 1.0).matrix, np.eye(2), atol=1e-9)
        np.testing.assert_allclose(schrodinger_monodromy(FREE, PERIOD, 0.25).matrix, -np.eye(2), atol=1e-9)

    def test_unit_determinant(self):
        for energy in (0.3, 1.7):
            M = schrodinger_monodromy(EXPONENTIAL, PERIOD, energy)
            self.assertAlmostEqual(M.det, 1.0, delta=1e-10)
            self.assertEqual(M.discriminant, M.trace)

    def test_rk4_order(self):
        factor = richardson_factor(EXPONENTIAL, PERIOD, 1.3, steps=(80, 160, 320))
        self.assertTrue(12.8 <= factor <= 19.2, factor)

    def test_accuracy_check(self):
        with self.assertRaises(AccuracyError):
            schrodinger_monodromy(EXPONENTIAL, PERIOD, 4.0, steps=8, check=True)
        schrodinger_monodromy(EXPONENTIAL, PERIOD, 0.5, check=True)

    def test_derivatives_match_finite_differences(self):
        h = 1e-4
        _, d1, d2 = schrodinger_batch(COSINE, PERIOD, [0.7], derivatives=True)
        around = discriminant(COSINE, PERIOD, [0.7 - h, 0.7, 0.7 + h])
        self.assertAlmostEqual(d1[0], (around[2] - around[0]) / (2 * h), delta=1e-6)
        self.assertAlmostEqual(d2[0], (around[2] - 2 * around[1] + around[0]) / h ** 2, delta=1e-3)

    def test_real_potential_symmetry(self):
        E = 0.7 + 0.2j
        values = discriminant(COSINE, PERIOD, [E, np.conj(E)])
        self.assertAlmostEqual(values[1], np.conj(values[0]), delta=1e-10)

    def test_exponential_potentials_are_isospectral(self):
        energies = np.linspace(0.05, 4.0, 9)
        free = discriminant(FREE, PERIOD, energies)
        for eps in (0.1, 0.3, 0.5):
            shifted = discriminant(PeriodicPotential({1: eps}), PERIOD, energies)
            self.assertLess(np.max(np.abs(shifted - free)), 1e-7)


class TestClassification(unittest.TestCase):

    def test_free_double_point(self):
        point = classify_root(FREE, PERIOD, 0.25, -1)
        self.assertEqual(point.classification, DIAGONALIZABLE)
        self.assertLess(point.off_diagonal, 1e-8)

    def test_glued_double_points(self):
        for energy, sign in ((0.25, -1), (1.0, 1), (2.25, -1)):
            point = classify_root(EXPONENTIAL, PERIOD, energy, sign)
            self.assertEqual(point.classification, JORDAN, energy)
            self.assertLess(point.trace_defect, 1e-8)

    def test_exponential_family_glues_first_double_point(self):
        energies = np.linspace(0.0, 4.0, 41)
        free = discriminant(FREE, PERIOD, energies)
        self.assertEqual(classify_root(FREE, PERIOD, 0.25, -1).classification, DIAGONALIZABLE)
        for eps in (0.1, 0.3, 0.5):
            potential = PeriodicPotential({1: eps})
            shifted = discriminant(potential, PERIOD, energies)
            self.assertLess(np.max(np.abs(shifted - free)), 1e-6, eps)
            self.assertEqual(classify_root(potential, PERIOD, 0.25, -1).classification, JORDAN, eps)

    def test_weakest_glued_double_point(self):
        point = classify_root(EXPONENTIAL, PERIOD, 4.0, 1, jordan_tol=1e-4)
        self.assertEqual(point.classification, JORDAN)

    def test_simple_root(self):
        point = classify_root(FREE, PERIOD, 0.5, 1)
        self.assertEqual(point.classification, SIMPLE)
        self.assertEqual(point.as_dict()['energy'], [0.5, 0.0])


@pytest.mark.slow
def test_free_resonant_points():
    points = resonant_points(FREE, PERIOD)
    energies = [p.energy.real for p in points]
    assert energies == pytest.approx([0.25, 1.0, 2.25, 4.0], abs=1e-6)
    assert all(p.classification == DIAGONALIZABLE for p in points)
    assert [p.sign for p in points] == [-1, 1, -1, 1]


@pytest.mark.slow
def test_glued_resonant_points():
    points = resonant_points(EXPONENTIAL, PERIOD)
    jordan = [p.energy.real for p in points if p.classification == JORDAN]
    for energy in (0.25, 1.0, 2.25):
        assert min(abs(e - energy) for e in jordan) < 1e-6


@pytest.mark.slow
def test_real_potential_gap_edges_are_simple():
    assert resonant_points(COSINE, PERIOD, window=(0.1, 0.5)) == []


def test_resonant_points_window():
    with pytest.raises(InvalidInputError):
        resonant_points(FREE, PERIOD, window=(1.0, 0.5))


def test_discriminant_scan(tmp_path):
    rows = discriminant_scan(EXPONENTIAL, PERIOD, [0.3, 0.3 + 0.1j, 1.5], steps=2000)
    assert len(rows) == 3
    for E, delta, plus, minus in rows:
        assert abs(plus) >= abs(minus)
        assert plus * minus == pytest.approx(1.0, abs=1e-8)
        assert plus + minus == pytest.approx(delta, abs=1e-8)
    path = tmp_path / 'scan.csv'
    write_scan(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0] == SCAN_HEADER
    assert len(lines) == 4 and len(lines[1].split(',')) == 8


class TestNLSMonodromy(unittest.TestCase):

    def test_zero_potential(self):
        k = 0.3 + 0.2j
        M = nls_monodromy(FREE, k)
        expected = np.diag([np.exp(1j * k * PERIOD), np.exp(-1j * k * PERIOD)])
        np.testing.assert_allclose(M.matrix, expected, atol=1e-9)
        self.assertAlmostEqual(M.multipliers[0], np.exp(-1j * k * PERIOD), delta=1e-9)

    def test_constant_potential(self):
        c, k = 0.2 - 0.1j, 0.4 + 0.1j
        A = np.array([[1j * k, -2j * np.conj(c)], [-2j * c, -1j * k]])
        M = nls_monodromy(PeriodicPotential({0: c}), k)
        np.testing.assert_allclose(M.matrix, expm(PERIOD * A), atol=1e-9)
        self.assertAlmostEqual(M.det, 1.0, delta=1e-10)


class TestReduction(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        from fixtures.clifford import clifford_s3
        cls.s3 = clifford_s3()
        cls.pair = conformal_pairs(cls.s3.potential, cls.s3.Psi, cls.s3.Phi)[0]
        cls.psi = floquet_function(cls.s3.potential, 0.31 + 0.17j, mode=(0, 0), cutoff=4)
        cls.phi = floquet_function(cls.s3.potential, 0.31 + 0.17j, mode=(0, 0), adjoint=True, cutoff=4)

    def test_profile_of_constant_potential(self):
        profile = y_profile(self.s3.potential)
        np.testing.assert_allclose(profile(np.array([0.0, 2.0])), (1 + 1j) / 4, atol=1e-15)

    def test_profile_requires_y_only_potential(self):
        potential = DiracPotential(PeriodicField.mode(self.s3.lattice, 1, 0, amplitude=0.1))
        with self.assertRaises(InvalidInputError):
            y_profile(potential)

    def test_slice_matches_nls_monodromy(self):
        self.assertLess(reduction_crosscheck(self.s3.potential, 0.3 + 0.4j, cutoff=6), 1e-8)

    def test_crosscheck_full_window_is_cutoff_independent(self):
        for cutoff in (4, 10):
            defect = reduction_crosscheck(self.s3.potential, 0.3 + 0.4j, cutoff=cutoff, window=2.0)
            self.assertLess(defect, 1e-8)

    def test_monodromy_eigenvalues_of_unbalanced_diagonal(self):
        M = np.diag([np.exp(14 + 1j), np.exp(-14 - 1j)])
        M[0, 1] = 1e-3
        rho, partner = monodromy_eigenvalues(M)
        np.testing.assert_allclose(rho, np.exp(14 + 1j), rtol=1e-14)
        np.testing.assert_allclose(partner, np.exp(-14 - 1j), rtol=1e-14)

    def test_direct_kernel_closed_form(self):
        closed = omega_1d(self.psi, self.pair)
        general = omega(self.psi, self.pair)
        for z in (0.0, 0.4 + 0.3j, 2.0 - 1.0j):
            np.testing.assert_allclose(closed(z), general(z), rtol=1e-10, atol=1e-12)

    def test_dual_kernel_closed_form(self):
        closed = omega_1d_dual(self.phi, self.pair)
        general = omega(self.phi, self.pair, side=DUAL)
        z = 0.7 + 1.1j
        np.testing.assert_allclose(closed(z), general(z), rtol=1e-10, atol=1e-12)

    def test_kernel_pole(self):
        with self.assertRaises(PoleError):
            omega_1d(self.pair.PsiD, self.pair)


@pytest.mark.slow
def test_r3_slice_matches_nls_monodromy():
    from fixtures.clifford import clifford_r3
    assert reduction_crosscheck(clifford_r3().potential, 0.3 + 0.4j, cutoff=24) < 1e-6

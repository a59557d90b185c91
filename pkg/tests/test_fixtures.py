"""
Tests for the Clifford torus fixtures and the R^3 Baker-Akhiezer spinors.
"""
import json
import unittest

import numpy as np
import pytest

from core.errors import InvalidInputError
from core.fields import eval_field
from dirac2d.cloud import cloud_distance, multiplier_cloud
from dirac2d.operator import dirac_residual
from fixtures.baker_akhiezer import baker_akhiezer_r3, glued_multipliers
from fixtures.clifford import (
    GLUED_PAIRS, POLES, R3_CUTOFF, clifford_r3, clifford_s3, double_point_report, manifest,
    r3_potential_values,
)

GRID = 2 * np.pi * np.arange(256) / 256


class TestCliffordS3(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.s3 = clifford_s3()

    def test_spinors_in_kernels(self):
        self.assertLess(dirac_residual(self.s3.potential, self.s3.Psi), 1e-14)
        self.assertLess(dirac_residual(self.s3.potential, self.s3.Phi, adjoint=True), 1e-14)

    def test_multipliers(self):
        np.testing.assert_allclose(self.s3.Psi.multipliers(), [-1, -1], atol=1e-12)
        np.testing.assert_allclose(self.s3.Phi.multipliers(), [-1, -1], atol=1e-12)

    def test_potential_is_constant(self):
        field = self.s3.potential.field
        self.assertAlmostEqual(field.zero_mode, (1 + 1j) / 4)
        self.assertAlmostEqual(field.norm(), abs((1 + 1j) / 4))


class TestCliffordR3(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.r3 = clifford_r3()

    def test_values(self):
        field = self.r3.potential.field
        self.assertAlmostEqual(eval_field(field, 0.4 + 0.5j * np.pi).real, -0.853553, places=5)
        self.assertAlmostEqual(abs(eval_field(field, 1.1 + 0.0j)), 0.0, delta=1e-12)
        y = np.linspace(0.1, 6.0, 7)
        np.testing.assert_allclose(eval_field(field, 1j * y), r3_potential_values(y), atol=1e-11)

    def test_only_y_modes(self):
        coeffs = self.r3.potential.field.coeffs
        self.assertEqual(self.r3.potential.cutoff, R3_CUTOFF)
        mask = np.ones_like(coeffs, dtype=bool)
        mask[R3_CUTOFF, :] = False
        self.assertEqual(np.count_nonzero(coeffs[mask]), 0)

    def test_coefficient_decay(self):
        field = self.r3.potential.field
        self.assertLess(abs(field.coefficient(0, 24)), 1e-9)
        self.assertLess(abs(field.coefficient(0, -24)), 1e-9)
        self.assertLess(abs(field.coefficient(0, 32)), 1e-12)

    def test_real_reduction(self):
        self.assertTrue(self.r3.potential.real_reduction)
        values = eval_field(self.r3.potential.field, 1j * GRID[:16])
        self.assertLess(np.max(np.abs(values.imag)), 1e-14)


class TestBakerAkhiezer(unittest.TestCase):

    def test_solves_dirac_equation(self):
        samples = baker_akhiezer_r3((1 - 1j) / 4, GRID)
        self.assertLess(samples.dirac_defect(), 1e-6)

    def test_profiles_are_periodic(self):
        samples = baker_akhiezer_r3(0.37 + 0.21j, np.array([0.3, 0.3 + 2 * np.pi]))
        np.testing.assert_allclose(samples.R1[0], samples.R1[1], atol=1e-10)
        np.testing.assert_allclose(samples.R2[0], samples.R2[1], atol=1e-10)
        np.testing.assert_allclose(samples.q[:, 0], samples.q[:, 1], atol=1e-10)

    def test_glued_multipliers(self):
        multipliers = glued_multipliers()
        self.assertEqual(len(multipliers), 4)
        for kappa in multipliers.values():
            np.testing.assert_allclose(kappa, [-1, -1], atol=1e-10)

    def test_poles_rejected(self):
        for lam in (0, POLES[2], POLES[0]):
            with self.assertRaises(InvalidInputError):
                baker_akhiezer_r3(lam, GRID)


def test_poles_distinct():
    assert len({round(p.real, 12) + 1j * round(p.imag, 12) for p in POLES}) == 3
    assert all(abs(p) > 0.1 for p in POLES)
    assert all(lam not in POLES for pair in GLUED_PAIRS for lam in pair)


def test_manifest_is_json():
    data = manifest(clifford_s3(), clifford_r3())
    text = json.dumps(data, sort_keys=True)
    assert json.loads(text)['r3_cutoff'] == R3_CUTOFF
    assert data['psi_exponents'] == [[-0.25, -0.25], [0.25, -0.25]]
    assert len(data['poles']) == 3


@pytest.mark.slow
def test_double_point_counts():
    report = double_point_report()
    assert report['clifford_s3']['count'] == 4
    assert report['clifford_r3']['count'] == 2
    assert report['clifford_r3']['margin'] > 1e-2


@pytest.mark.slow
def test_conformally_equivalent_clouds():
    contour = tuple(1j * k / 32 for k in range(32))
    s3 = multiplier_cloud(clifford_s3().potential, contour, cutoff=24)
    r3 = multiplier_cloud(clifford_r3().potential, contour, cutoff=24)
    assert cloud_distance(s3, r3) < 1e-6

"""
Clifford tori: the torus in S^3 with constant potential and its stereographic
image in R^3 with a real, y-dependent potential.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import structlog

from config import settings
from core.fields import PeriodicField
from core.lattice import Lattice
from core.quasi import ExponentPair, constant_spinor
from dirac2d.operator import DiracPotential
from dirac2d.spectrum import kernel_singular_values

logger = structlog.get_logger(__name__)

SQRT2 = np.sqrt(2.0)
S3_POTENTIAL = (1 + 1j) / 4
R3_SAMPLES = 256
R3_CUTOFF = 32

# Glued pairs of spectral parameters and the pole constants of the R^3 torus.
GLUED_PAIRS = (((1 + 1j) / 4, (-1 + 1j) / 4), (-(1 + 1j) / 4, (1 - 1j) / 4))
POLES = (
    (-1 + 1j + np.sqrt(complex(-4, -2))) / (4 * SQRT2),
    (-1 + 1j - np.sqrt(complex(-4, -2))) / (4 * SQRT2),
    1 / np.sqrt(8.0),
)
U_CONSTANT = (1 + 1j) / 4


@dataclass(frozen=True, eq=False)
class CliffordS3Data:
    lattice: Lattice
    potential: DiracPotential
    Psi: object
    Phi: object


@dataclass(frozen=True, eq=False)
class CliffordR3Data:
    lattice: Lattice
    potential: DiracPotential
    poles: Tuple[complex, complex, complex] = POLES
    glued_pairs: tuple = GLUED_PAIRS
    u: complex = U_CONSTANT


def clifford_s3():
    lattice = Lattice.square()
    potential = DiracPotential(PeriodicField.constant(lattice, S3_POTENTIAL))
    Psi = constant_spinor(
        lattice, ExponentPair(-(1 + 1j) / 4, (1 - 1j) / 4), (1 / SQRT2, 1 / SQRT2)
    )
    Phi = constant_spinor(
        lattice, ExponentPair((1 - 1j) / 4, -(1 + 1j) / 4),
        (-1 / (2 * SQRT2), 1 / (2 * SQRT2)),
    )
    return CliffordS3Data(lattice, potential, Psi, Phi)


def r3_potential_values(y):
    """U(y) = sin y / (2 sqrt 2 (sin y - sqrt 2))."""
    s = np.sin(y)
    return s / (2 * SQRT2 * (s - SQRT2))


def clifford_r3(cutoff=R3_CUTOFF, samples=R3_SAMPLES):
    """
    R^3 Clifford potential from a 1D FFT; only the modes (0, n) are populated.
    """
    lattice = Lattice.square()
    y = 2 * np.pi * np.arange(samples) / samples
    spectrum = np.fft.fft(r3_potential_values(y)) / samples
    n = np.arange(-cutoff, cutoff + 1)
    coeffs = np.zeros((2 * cutoff + 1, 2 * cutoff + 1), dtype=complex)
    coeffs[cutoff, :] = spectrum[n % samples]
    # U is real; drop the roundoff imaginary part of the symmetric spectrum.
    coeffs[cutoff, :] = 0.5 * (coeffs[cutoff, :] + np.conj(coeffs[cutoff, ::-1]))
    potential = DiracPotential(PeriodicField(lattice, coeffs), real_reduction=True)
    logger.debug("R3 Clifford potential built", cutoff=cutoff, samples=samples)
    return CliffordR3Data(lattice, potential)


def double_point_report(cutoff_s3=None, cutoff_r3=None, k=8):
    """
    Kernel counts at multipliers (-1, -1) for both Clifford potentials.

    Counts use the absolute thresholds 1e-8 (S^3) and 1e-6 (R^3); the margin
    is the first singular value above the threshold.
    """
    cutoff_s3 = cutoff_s3 or settings.DEFAULT_CUTOFF
    cutoff_r3 = cutoff_r3 or R3_CUTOFF
    report = {}
    for name, potential, cutoff, threshold in (
        ('clifford_s3', clifford_s3().potential, cutoff_s3, 1e-8),
        ('clifford_r3', clifford_r3(cutoff_r3).potential, cutoff_r3, 1e-6),
    ):
        values = kernel_singular_values(potential, (-1, -1), k=k, cutoff=cutoff)
        count = int(np.sum(values < threshold))
        report[name] = {
            'count': count,
            'threshold': threshold,
            'margin': float(values[count]) if count < len(values) else float('nan'),
            'singular_values': [float(v) for v in values],
        }
    logger.info(
        "Double point report",
        s3_count=report['clifford_s3']['count'],
        r3_count=report['clifford_r3']['count'],
    )
    return report


def manifest(s3, r3):
    """Constants of both fixtures for the fixture manifest."""
    return {
        'lattice': [[s3.lattice.gamma1.real, s3.lattice.gamma1.imag],
                    [s3.lattice.gamma2.real, s3.lattice.gamma2.imag]],
        's3_potential': [S3_POTENTIAL.real, S3_POTENTIAL.imag],
        'psi_exponents': [[s3.Psi.exponents.mu.real, s3.Psi.exponents.mu.imag],
                          [s3.Psi.exponents.nu.real, s3.Psi.exponents.nu.imag]],
        'phi_exponents': [[s3.Phi.exponents.mu.real, s3.Phi.exponents.mu.imag],
                          [s3.Phi.exponents.nu.real, s3.Phi.exponents.nu.imag]],
        'r3_cutoff': r3.potential.cutoff,
        'poles': [[p.real, p.imag] for p in r3.poles],
        'glued_pairs': [[[a.real, a.imag], [b.real, b.imag]] for a, b in r3.glued_pairs],
        'u': [r3.u.real, r3.u.imag],
    }

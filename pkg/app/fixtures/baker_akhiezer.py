"""
Baker-Akhiezer spinors of the R^3 Clifford torus.

psi(lambda, z) = exp(lambda z - conj(z) |u|^2 / lambda) * (R1, R2)(lambda, y) with

    R1 = f3 + q1 (f1 - f3) + q2 (f2 - f3),   f_j = lambda / (lambda - p_j)
    R2 = g3 + t1 (g1 - g3) + t2 (g2 - g3),   g_j = p_j / (p_j - lambda)

The y-profiles q1, q2, t1, t2 are fixed by gluing psi at the two pairs of
spectral parameters listed in ``GLUED_PAIRS``.
"""
from dataclasses import dataclass

import numpy as np
import structlog

from core import metrics
from core.errors import InvalidInputError, SingularSystemError
from core.fields import PeriodicField
from core.lattice import Lattice
from core.quasi import ExponentPair, QuasiPeriodicFunction, multipliers_of
from fixtures.clifford import GLUED_PAIRS, POLES, U_CONSTANT, r3_potential_values

logger = structlog.get_logger(__name__)

POLE_TOL = 1e-12
SINGULAR_TOL = 1e-12


def prefactor_exponents(lam, u=U_CONSTANT):
    lam = complex(lam)
    return ExponentPair(lam, -abs(u) ** 2 / lam)


def _weights(lam, poles=POLES):
    f = np.array([lam / (lam - p) for p in poles])
    g = np.array([p / (p - lam) for p in poles])
    return f, g


def _gluing_profiles(y, kind):
    """
    Solve the two gluing conditions for one component at every y.

    Gluing (a, b) with factor e^{iy} and (c, d) with e^{-iy}:
    e^{iy} R(a) = R(b) and e^{-iy} R(c) = R(d).
    """
    (a, b), (c, d) = GLUED_PAIRS
    index = 0 if kind == 'q' else 1
    wa, wb, wc, wd = (_weights(lam)[index] for lam in (a, b, c, d))
    up, down = np.exp(1j * y), np.exp(-1j * y)

    def row(w_left, w_right, phase):
        coefficients = [phase * (w_left[j] - w_left[2]) - (w_right[j] - w_right[2]) for j in (0, 1)]
        rhs = -(phase * w_left[2] - w_right[2])
        return coefficients, rhs

    (a11, a12), r1 = row(wa, wb, up)
    (a21, a22), r2 = row(wc, wd, down)
    system = np.stack([np.stack([a11, a12], axis=-1), np.stack([a21, a22], axis=-1)], axis=-2)
    rhs = np.stack([r1, r2], axis=-1)
    det = np.linalg.det(system)
    scale = np.max(np.abs(system), axis=(-2, -1)) ** 2
    singular = np.abs(det) < SINGULAR_TOL * scale
    if np.any(singular):
        sample = float(np.atleast_1d(y)[np.argmax(np.atleast_1d(singular))])
        metrics.error_counter.labels(error_type='singular_system').inc()
        raise SingularSystemError(f"gluing system for {kind} is singular at y={sample}", sample=sample)
    solution = np.linalg.solve(system, rhs[..., None])[..., 0]
    return solution[..., 0], solution[..., 1], np.abs(det)


@dataclass(frozen=True, eq=False)
class BakerAkhiezerSamples:
    lam: complex
    y: np.ndarray
    q: np.ndarray
    t: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    conditioning: np.ndarray

    @property
    def exponents(self):
        return prefactor_exponents(self.lam)

    def multipliers(self, lattice):
        return multipliers_of(self.exponents, lattice)

    def potential_from_profiles(self):
        """sum_j t_j p_j with t3 = 1 - t1 - t2."""
        t1, t2 = self.t
        return t1 * POLES[0] + t2 * POLES[1] + (1 - t1 - t2) * POLES[2]

    def as_spinor(self, lattice, cutoff):
        """Quasi-periodic spinor with the y-profiles in the modes (0, n)."""
        samples = len(self.y)
        n = np.arange(-cutoff, cutoff + 1)
        components = []
        for profile in (self.R1, self.R2):
            coeffs = np.zeros((2 * cutoff + 1, 2 * cutoff + 1), dtype=complex)
            coeffs[cutoff, :] = (np.fft.fft(profile) / samples)[n % samples]
            components.append(PeriodicField(lattice, coeffs))
        return QuasiPeriodicFunction(self.exponents, tuple(components))

    def dirac_defect(self):
        """
        Grid residual of U R1 + lam R2 - (i/2) R2' and R1/(8 lam) - (i/2) R1' + U R2
        with spectral y-derivatives; requires a uniform grid over one period.
        """
        lam = self.lam
        U = r3_potential_values(self.y)
        first = U * self.R1 + lam * self.R2 - 0.5j * _spectral_derivative(self.R2)
        second = abs(U_CONSTANT) ** 2 / lam * self.R1 - 0.5j * _spectral_derivative(self.R1) + U * self.R2
        scale = max(np.max(np.abs(self.R1)), np.max(np.abs(self.R2)))
        return float(max(np.max(np.abs(first)), np.max(np.abs(second))) / scale)


def _spectral_derivative(values):
    samples = len(values)
    k = np.fft.fftfreq(samples, d=1.0 / samples)
    if samples % 2 == 0:
        k[samples // 2] = 0
    return np.fft.ifft(1j * k * np.fft.fft(values))


def baker_akhiezer_r3(lam, y):
    """Profiles and spinor samples of the R^3 Baker-Akhiezer function at lam."""
    lam = complex(lam)
    if lam == 0 or any(abs(lam - p) < POLE_TOL for p in POLES):
        raise InvalidInputError(f"lambda={lam} is a pole of the Baker-Akhiezer ansatz")
    y = np.asarray(y, dtype=float)
    q1, q2, det_q = _gluing_profiles(y, 'q')
    t1, t2, det_t = _gluing_profiles(y, 't')
    f, g = _weights(lam)
    R1 = f[2] + q1 * (f[0] - f[2]) + q2 * (f[1] - f[2])
    R2 = g[2] + t1 * (g[0] - g[2]) + t2 * (g[1] - g[2])
    logger.debug(
        "Baker-Akhiezer profiles solved",
        lam=str(lam),
        samples=len(y),
        min_det=float(min(det_q.min(), det_t.min())),
    )
    return BakerAkhiezerSamples(
        lam, y, np.array([q1, q2]), np.array([t1, t2]), R1, R2, np.minimum(det_q, det_t)
    )


def glued_multipliers(lattice=None):
    """Prefactor multipliers at the four glued spectral parameters."""
    lattice = lattice or Lattice.square()
    return {
        lam: multipliers_of(prefactor_exponents(lam), lattice)
        for pair in GLUED_PAIRS for lam in pair
    }

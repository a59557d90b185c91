"""
Monodromy of one-dimensional periodic systems.

Schroedinger:  -psi'' + u psi = E psi, integrated as Y' = [[0, 1], [u - E, 0]] Y.
NLS reduction:  chi' = [[i k, -2i conj U], [-2i U, -i k]] chi.

Both systems are trace-free, so det M = 1. Integration is fixed-step RK4,
vectorized over a batch of spectral parameters.
"""
from dataclasses import dataclass

import numpy as np
import structlog

from config import settings
from core.errors import AccuracyError, InvalidInputError
from core.integrate import rk4

logger = structlog.get_logger(__name__)

RICHARDSON_STEPS = (40, 80, 160)


class PeriodicPotential:
    """
    u(x) = sum_j c_j exp(2 pi i j x / T) from a mapping {j: c_j}, a callable, or
    uniform samples over one period.
    """

    def __init__(self, source, period=2 * np.pi):
        if period <= 0:
            raise InvalidInputError(f"period must be positive, got {period}")
        self.period = float(period)
        if callable(source):
            self._func = source
            self.coefficients = None
        else:
            if not isinstance(source, dict):
                samples = np.asarray(source, dtype=complex)
                if samples.ndim != 1 or len(samples) == 0:
                    raise InvalidInputError("potential samples must be a nonempty 1D array")
                spectrum = np.fft.fft(samples) / len(samples)
                j = np.fft.fftfreq(len(samples), d=1.0 / len(samples)).astype(int)
                source = {int(jj): complex(c) for jj, c in zip(j, spectrum) if c != 0}
            self.coefficients = {int(j): complex(c) for j, c in source.items()}
            self._func = None

    @classmethod
    def zero(cls, period=2 * np.pi):
        return cls({}, period)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self._func is not None:
            return np.asarray(self._func(x), dtype=complex)
        values = np.zeros(x.shape, dtype=complex)
        for j, c in self.coefficients.items():
            values = values + c * np.exp(2j * np.pi * j * x / self.period)
        return values

    def is_real(self, tol=1e-14):
        if self.coefficients is None:
            x = np.linspace(0, self.period, 64, endpoint=False)
            return bool(np.max(np.abs(self(x).imag)) <= tol)
        return all(
            abs(c - np.conj(self.coefficients.get(-j, 0))) <= tol
            for j, c in self.coefficients.items()
        )

    def __repr__(self):
        if self.coefficients is None:
            return f"PeriodicPotential(callable, period={self.period})"
        return f"PeriodicPotential(modes={sorted(self.coefficients)}, period={self.period})"


def as_potential(u, period):
    return u if isinstance(u, PeriodicPotential) else PeriodicPotential(u, period)


@dataclass(frozen=True, eq=False)
class MonodromyMatrix:
    matrix: np.ndarray
    parameter: complex
    period: float

    @property
    def trace(self):
        return complex(np.trace(self.matrix))

    @property
    def det(self):
        return complex(np.linalg.det(self.matrix))

    @property
    def discriminant(self):
        return self.trace

    @property
    def multipliers(self):
        """Eigenvalues, |kappa| >= 1 first."""
        values = np.linalg.eigvals(self.matrix)
        return tuple(complex(v) for v in sorted(values, key=lambda v: (-abs(v), np.angle(v))))


def _schrodinger_rhs(u, energies, derivatives):
    """
    RHS for the stacked state [Y, dY/dE, d2Y/dE2], each of shape (B, 2, 2).
    """
    def rhs(x, state):
        v = (u(np.array([x]))[0] - energies)[:, None]
        out = np.empty_like(state)
        Y = state[:, 0]
        out[:, 0, 0] = Y[:, 1]
        out[:, 0, 1] = v * Y[:, 0]
        if derivatives:
            Z, W = state[:, 1], state[:, 2]
            out[:, 1, 0] = Z[:, 1]
            out[:, 1, 1] = v * Z[:, 0] - Y[:, 0]
            out[:, 2, 0] = W[:, 1]
            out[:, 2, 1] = v * W[:, 0] - 2 * Z[:, 0]
        return out

    return rhs


def schrodinger_batch(u, period, energies, steps=None, derivatives=False):
    """
    Monodromy matrices for many energies at once.

    Returns M of shape (B, 2, 2), and with ``derivatives`` also the first and
    second energy derivatives of the discriminant.
    """
    steps = steps or settings.HILL_STEPS
    u = as_potential(u, period)
    energies = np.atleast_1d(np.asarray(energies, dtype=complex))
    layers = 3 if derivatives else 1
    state = np.zeros((len(energies), layers, 2, 2), dtype=complex)
    state[:, 0] = np.eye(2)
    final = rk4(_schrodinger_rhs(u, energies, derivatives), state, 0.0, u.period, steps)
    M = final[:, 0]
    if not derivatives:
        return M
    delta_1 = np.trace(final[:, 1], axis1=-2, axis2=-1)
    delta_2 = np.trace(final[:, 2], axis1=-2, axis2=-1)
    return M, delta_1, delta_2


def schrodinger_monodromy(u, period, energy, steps=None, check=False, tol=1e-8):
    """
    Monodromy of -psi'' + u psi = E psi over one period.

    With ``check`` the result is compared against the half-step-count run;
    an RK4 error estimate above ``tol`` raises AccuracyError.
    """
    steps = steps or settings.HILL_STEPS
    u = as_potential(u, period)
    M = schrodinger_batch(u, u.period, [energy], steps)[0]
    if check:
        coarse = schrodinger_batch(u, u.period, [energy], max(steps // 2, 1))[0]
        estimate = float(np.max(np.abs(M - coarse))) / 15
        if estimate > tol:
            raise AccuracyError(
                f"monodromy error estimate {estimate:.3e} above {tol:.1e} with {steps} steps"
            )
    return MonodromyMatrix(M, complex(energy), u.period)


def discriminant(u, period, energies, steps=None):
    """Delta(E) = tr M(E) for an array of energies."""
    M = schrodinger_batch(u, period, energies, steps)
    return np.trace(M, axis1=-2, axis2=-1)


def richardson_factor(u, period, energy, steps=RICHARDSON_STEPS):
    """
    |M_h - M_{h/2}| / |M_{h/2} - M_{h/4}|, which tends to 16 for RK4.
    """
    coarse, medium, fine = (
        schrodinger_batch(u, period, [energy], s)[0] for s in steps
    )
    numerator = float(np.max(np.abs(coarse - medium)))
    denominator = float(np.max(np.abs(medium - fine)))
    if denominator == 0.0:
        raise AccuracyError("step refinement produced identical monodromies")
    return numerator / denominator


def _nls_rhs(U, ks):
    def rhs(y, chi):
        value = U(np.array([y]))[0]
        out = np.empty_like(chi)
        out[:, 0] = 1j * ks[:, None] * chi[:, 0] - 2j * np.conj(value) * chi[:, 1]
        out[:, 1] = -2j * value * chi[:, 0] - 1j * ks[:, None] * chi[:, 1]
        return out

    return rhs


def nls_batch(U, ks, period=2 * np.pi, steps=None):
    """Monodromies of the NLS auxiliary system for an array of k, shape (B, 2, 2)."""
    steps = steps or settings.HILL_STEPS
    U = as_potential(U, period)
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    state = np.zeros((len(ks), 2, 2), dtype=complex)
    state[:] = np.eye(2)
    return rk4(_nls_rhs(U, ks), state, 0.0, U.period, steps)


def nls_monodromy(U, k, period=2 * np.pi, steps=None):
    """y-monodromy of chi' = [[i k, -2i conj U], [-2i U, -i k]] chi."""
    U = as_potential(U, period)
    M = nls_batch(U, [k], U.period, steps)[0]
    logger.debug("NLS monodromy", k=str(complex(k)), trace=str(complex(np.trace(M))))
    return MonodromyMatrix(M, complex(k), U.period)

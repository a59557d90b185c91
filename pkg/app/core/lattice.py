"""
Period lattices, dual bases and Fourier symbols.

A mode (m, n) is the plane wave e_{mn}(z) = exp(i<m a1 + n a2, (x, y)>) where
a1, a2 is the dual basis. In complex form e_{mn} = exp(d z + dbar conj(z)) with
d = (i kx + ky)/2 and dbar = (i kx - ky)/2, which are the symbols of the
derivatives d/dz and d/dzbar.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import structlog

from core.errors import InvalidInputError

logger = structlog.get_logger(__name__)

DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class Lattice:
    gamma1: complex
    gamma2: complex

    def __post_init__(self):
        object.__setattr__(self, 'gamma1', complex(self.gamma1))
        object.__setattr__(self, 'gamma2', complex(self.gamma2))
        scale = abs(self.gamma1) * abs(self.gamma2)
        if scale == 0.0 or abs(self.area) <= DEGENERACY_TOL * scale:
            raise InvalidInputError(
                f"degenerate lattice: gamma1={self.gamma1}, gamma2={self.gamma2}"
            )
        if self.area < 0:
            raise InvalidInputError(
                f"lattice is negatively oriented: gamma1={self.gamma1}, gamma2={self.gamma2}"
            )

    @classmethod
    def square(cls, side=2 * np.pi):
        return cls(side, 1j * side)

    @property
    def area(self):
        """Oriented area Im(conj(gamma1) gamma2) of the period cell."""
        return (self.gamma1.conjugate() * self.gamma2).imag

    @property
    def periods(self):
        return (self.gamma1, self.gamma2)

    @cached_property
    def dual(self):
        """Dual basis as a 2x2 array whose rows are a1 and a2."""
        return dual_basis(self)

    def wavevectors(self, cutoff):
        """Real wave vectors (kx, ky) of the modes |m|, |n| <= cutoff."""
        m, n = mode_grid(cutoff)
        kx = m * self.dual[0, 0] + n * self.dual[1, 0]
        ky = m * self.dual[0, 1] + n * self.dual[1, 1]
        return kx, ky

    def symbols(self, cutoff):
        """Symbols (d, dbar) of d/dz and d/dzbar on the mode box."""
        kx, ky = self.wavevectors(cutoff)
        return 0.5 * (1j * kx + ky), 0.5 * (1j * kx - ky)

    def mode_symbols(self, m, n):
        kx = m * self.dual[0, 0] + n * self.dual[1, 0]
        ky = m * self.dual[0, 1] + n * self.dual[1, 1]
        return 0.5 * (1j * kx + ky), 0.5 * (1j * kx - ky)

    def grid(self, size):
        """Points (a/P) gamma1 + (b/P) gamma2, indexed [a, b]."""
        steps = np.arange(size) / size
        return steps[:, None] * self.gamma1 + steps[None, :] * self.gamma2

    def close_to(self, other, tol=1e-12):
        return (
            abs(self.gamma1 - other.gamma1) <= tol * abs(self.gamma1)
            and abs(self.gamma2 - other.gamma2) <= tol * abs(self.gamma2)
        )


def dual_basis(lattice):
    """
    Return the dual basis a1, a2 with <a_j, gamma_k> = 2 pi delta_jk.
    """
    periods = np.array([
        [lattice.gamma1.real, lattice.gamma1.imag],
        [lattice.gamma2.real, lattice.gamma2.imag],
    ])
    try:
        dual = 2 * np.pi * np.linalg.solve(periods, np.eye(2)).T
    except np.linalg.LinAlgError as e:
        logger.error(
            "Dual basis failed",
            gamma1=str(lattice.gamma1),
            gamma2=str(lattice.gamma2),
            error=str(e),
            exception_type=type(e).__name__,
        )
        raise InvalidInputError("degenerate lattice") from e
    return dual


def mode_grid(cutoff):
    """Integer arrays (m, n) of shape (2N+1, 2N+1) indexed [m+N, n+N]."""
    modes = np.arange(-cutoff, cutoff + 1)
    return np.meshgrid(modes, modes, indexing='ij')


def require_same_lattice(*lattices):
    first = lattices[0]
    for other in lattices[1:]:
        if other is not first and not first.close_to(other):
            raise InvalidInputError("lattice mismatch")

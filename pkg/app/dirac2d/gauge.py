"""
Gauge action U -> U exp(conj a + conj b conj z - a - b z).
"""
import numpy as np
import structlog

from config import settings
from core import metrics
from core.errors import InvalidInputError
from core.quasi import ExponentPair, QuasiPeriodicFunction, periodic_mode
from dirac2d.operator import DiracPotential

logger = structlog.get_logger(__name__)

ADMISSIBILITY_TOL = 1e-10


def is_admissible(b, lattice, tol=ADMISSIBILITY_TOL):
    """Im(b gamma_j) is an integer multiple of pi for both periods."""
    b = complex(b)
    for g in lattice.periods:
        ratio = (b * g).imag / np.pi
        if abs(ratio - round(ratio)) > tol:
            return False
    return True


def gauge_mode(b, lattice):
    """Fourier mode of exp(conj b conj z - b z)."""
    b = complex(b)
    if not is_admissible(b, lattice):
        metrics.error_counter.labels(error_type='gauge').inc()
        raise InvalidInputError(
            f"gauge parameter b={b} is not admissible: Im(b gamma_j) must lie in pi Z"
        )
    return periodic_mode(ExponentPair(-b, b.conjugate()), lattice, settings.MULTIPLIER_TOL)


def gauge_transform(potential, a, b):
    a, b = complex(a), complex(b)
    m, n = gauge_mode(b, potential.lattice)
    phase = np.exp(a.conjugate() - a)
    field = potential.field.shift_modes(m, n) * phase
    logger.debug("Gauge transform", a=str(a), b=str(b), mode=(m, n))
    return DiracPotential(field)


def gauge_spinor(psi, a, b):
    """
    Transform a Floquet spinor of D[U] into one of D[U'].

    psi_1 -> exp(a + b z) psi_1 and psi_2 -> exp(conj a + conj b conj z) psi_2;
    the exponents move from (mu, nu) to (mu + b, nu).
    """
    a, b = complex(a), complex(b)
    m, n = gauge_mode(b, psi.lattice)
    first, second = psi.components
    return QuasiPeriodicFunction(
        ExponentPair(psi.exponents.mu + b, psi.exponents.nu),
        (first * np.exp(a), second.shift_modes(m, n) * np.exp(a.conjugate())),
    )


def gauge_multiplier_factors(b, lattice):
    """kappa_j -> exp(b gamma_j) kappa_j."""
    return tuple(complex(np.exp(complex(b) * g)) for g in lattice.periods)

"""
Distinguished solution pairs for infinitesimal Darboux transformations.

The Dirac form D = [[U, d], [-dbar, conj U]] is rewritten as the pair of
systems

    L:   dbar psi_1 = p psi_2,     d psi_2 = q psi_1
    L*:  dbar phi_1 = -q phi_2,    d phi_2 = -p phi_1

with p = conj U and q = -U, so that solutions of L are kernel elements of D
and solutions of L* are kernel elements of the adjoint operator.
"""
from dataclasses import dataclass

import structlog

from config import settings
from core import metrics
from core.errors import InvalidInputError, InvalidPairError
from core.fields import PeriodicField
from core.quasi import periodic_mode, star_involution
from dirac2d.operator import dirac_residual
from dirac2d.spectrum import floquet_function

logger = structlog.get_logger(__name__)

PAIR_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PQPotential:
    p: PeriodicField
    q: PeriodicField

    @classmethod
    def from_dirac(cls, potential):
        return cls(potential.field.conj(), -potential.field)

    def dirac_defect(self, potential):
        """max(|p - conj U|, |q + U|) on coefficients."""
        return max(
            (self.p - potential.field.conj()).norm(),
            (self.q + potential.field).norm(),
        )


@dataclass(frozen=True, eq=False)
class DarbouxPair:
    """
    PsiD solves L with multipliers kappa_hat; PhiD solves L* with 1/kappa_hat.
    """

    potential: object
    PsiD: object
    PhiD: object

    @property
    def pq(self):
        return PQPotential.from_dirac(self.potential)

    @property
    def lattice(self):
        return self.potential.lattice

    @property
    def multipliers(self):
        return self.PsiD.multipliers()

    def residuals(self):
        return (
            dirac_residual(self.potential, self.PsiD, relative=True),
            dirac_residual(self.potential, self.PhiD, adjoint=True, relative=True),
        )

    def validate(self, tol=PAIR_RESIDUAL_TOL):
        for name, spinor in (('PsiD', self.PsiD), ('PhiD', self.PhiD)):
            if len(spinor) != 2:
                raise InvalidInputError(f"{name} must be a two-component spinor")
        mode = periodic_mode(
            self.PsiD.exponents + self.PhiD.exponents, self.lattice, settings.MULTIPLIER_TOL
        )
        if mode is None:
            metrics.error_counter.labels(error_type='invalid_pair').inc()
            raise InvalidPairError(
                "multipliers of PsiD and PhiD are not reciprocal",
                psi_multipliers=[str(k) for k in self.PsiD.multipliers()],
                phi_multipliers=[str(k) for k in self.PhiD.multipliers()],
            )
        psi_residual, phi_residual = self.residuals()
        if max(psi_residual, phi_residual) > tol:
            metrics.error_counter.labels(error_type='invalid_pair').inc()
            raise InvalidPairError(
                f"pair residuals {psi_residual:.3e}, {phi_residual:.3e} exceed {tol:.1e}"
            )
        logger.debug(
            "Darboux pair validated",
            psi_residual=psi_residual,
            phi_residual=phi_residual,
            mode=mode,
        )
        return self


def make_pair(potential, PsiD, PhiD, tol=PAIR_RESIDUAL_TOL):
    return DarbouxPair(potential, PsiD, PhiD).validate(tol)


def build_pair(potential, mu_psi, index_psi=None, mu_phi=None, index_phi=None, cutoff=None,
               mode_psi=None, mode_phi=None):
    """
    Pair built from a slice eigenpair of D at mu_psi and one of the adjoint
    operator at mu_phi, each addressed by index or by dominant mode.
    """
    PsiD = floquet_function(potential, mu_psi, index_psi, cutoff=cutoff, mode=mode_psi)
    PhiD = floquet_function(potential, mu_phi, index_phi, adjoint=True, cutoff=cutoff, mode=mode_phi)
    return make_pair(potential, PsiD, PhiD)


def conformal_pairs(potential, Psi, Phi):
    """
    The two pairs (Psi, Phi*) and (Psi*, Phi) whose variations add up to the
    conformal-flow derivative of U.
    """
    return (
        make_pair(potential, Psi, star_involution(Phi)),
        make_pair(potential, star_involution(Psi), Phi),
    )

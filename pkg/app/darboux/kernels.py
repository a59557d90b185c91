"""
Kernels of infinitesimal Darboux transformations and the variations they produce.

For a solution psi of L and a pair (PsiD, PhiD) the form

    d omega = PhiD_1 psi_1 dz - PhiD_2 psi_2 dzbar

is closed. Its primitive is fixed by the Floquet condition whenever the
multipliers of omega are not both 1; otherwise the periods must vanish and the
primitive is fixed at a basepoint. The dual form uses a solution phi of L*:

    d omega_dual = phi_1 PsiD_1 dz - phi_2 PsiD_2 dzbar.
"""
from dataclasses import dataclass

import numpy as np
import structlog
from scipy.optimize import linear_sum_assignment

from config import settings
from core import metrics
from core.errors import InvalidInputError, ObstructionError
from core.fields import PeriodicField, mul_fields
from core.quasi import (
    ZERO_EXPONENTS, QuasiPeriodicFunction, periodic_mode, quasi_product,
)
from dirac2d.spectrum import slice_spectrum

logger = structlog.get_logger(__name__)

DIRECT = 'direct'
DUAL = 'dual'
FLOQUET = 'floquet'
BASEPOINT = 'basepoint'


def _integrands(psi, pair, side):
    """(d omega, dbar omega) as scalar quasi-periodic functions."""
    if side == DIRECT:
        left, right = pair.PhiD, psi
    elif side == DUAL:
        left, right = psi, pair.PsiD
    else:
        raise InvalidInputError(f"unknown kernel side {side!r}")
    dz = quasi_product(left, right, 0, 0)
    dzbar = quasi_product(left, right, 1, 1).scale(-1)
    return dz, dzbar


def closedness_defect(psi, pair, side=DIRECT):
    """|dbar(d omega) - d(dbar omega)| relative to the integrand norms."""
    dz, dzbar = _integrands(psi, pair, side)
    mu, nu = dz.exponents.mu, dz.exponents.nu
    mixed = dz[0].apply_shifted('dzbar', nu) - dzbar[0].apply_shifted('dz', mu)
    scale = max(dz.norm() + dzbar.norm(), 1e-300)
    return mixed.norm() / scale


def _expm1_ratio(s):
    """(e^s - 1)/s with the removable singularity at s = 0."""
    s = np.asarray(s, dtype=complex)
    small = np.abs(s) < 1e-8
    safe = np.where(small, 1.0, s)
    return np.where(small, 1 + s / 2, np.expm1(safe) / safe)


def _segment_integral(dz, dzbar, period):
    """Integral of dz-form plus dzbar-form along t * period, t in [0, 1]."""
    lattice = dz.lattice
    mu, nu = dz.exponents.mu, dz.exponents.nu
    cutoff = dz.cutoff
    d, dbar = lattice.symbols(cutoff)
    growth = (d + mu) * period + (dbar + nu) * np.conj(period)
    coefficients = dz[0].resize(cutoff).coeffs * period + dzbar[0].resize(cutoff).coeffs * np.conj(period)
    return complex(np.sum(coefficients * _expm1_ratio(growth)))


def period_integrals(psi, pair, side=DIRECT):
    """Integrals of d omega along the two generators from the origin."""
    dz, dzbar = _integrands(psi, pair, side)
    return tuple(_segment_integral(dz, dzbar, g) for g in psi.lattice.periods)


def _floquet_primitive(dz, dzbar, via):
    """
    Mode-wise primitive with the exponents of the integrands.

    Each mode is taken from the preferred equation unless its shifted symbol
    vanishes there, in which case the other equation is used.
    """
    lattice = dz.lattice
    mu, nu = dz.exponents.mu, dz.exponents.nu
    cutoff = dz.cutoff
    d, dbar = lattice.symbols(cutoff)
    holo = d + mu
    anti = dbar + nu
    f = dz[0].resize(cutoff).coeffs
    h = dzbar[0].resize(cutoff).coeffs
    tol = settings.RESONANCE_TOL
    if via == 'dz':
        use_anti = np.abs(holo) < tol * (1 + abs(mu))
    elif via == 'dzbar':
        use_anti = ~(np.abs(anti) < tol * (1 + abs(nu)))
    else:
        raise InvalidInputError(f"unknown derivative direction {via!r}")
    coeffs = np.where(use_anti, h / np.where(use_anti, anti, 1.0), f / np.where(use_anti, 1.0, holo))
    g = PeriodicField(lattice, coeffs)
    defect_holo = np.linalg.norm(holo * coeffs - f)
    defect_anti = np.linalg.norm(anti * coeffs - h)
    return g, max(defect_holo, defect_anti)


@dataclass(frozen=True, eq=False)
class Kernel(QuasiPeriodicFunction):
    """
    A primitive omega together with the relative residual of the equation it
    was checked against, and the normalization actually used.
    """

    defect: float = 0.0
    normalization: str = FLOQUET


def omega(psi, pair, side=DIRECT, normalization=FLOQUET, c=0.0, z0=0.0, via='dz'):
    """
    Primitive of the closed form built from ``psi`` and ``pair``.

    ``normalization='floquet'`` fixes omega by its multipliers. When those are
    (1, 1) the periods must vanish and omega is fixed at the basepoint instead.
    ``normalization='basepoint'`` needs trivial multipliers and zero periods and
    sets omega(z0) = c.
    """
    dz, dzbar = _integrands(psi, pair, side)
    lattice = psi.lattice
    trivial = periodic_mode(dz.exponents, lattice, settings.MULTIPLIER_TOL)
    scale = max(dz.norm() + dzbar.norm(), 1e-300)

    if normalization == FLOQUET and trivial is None:
        g, defect = _floquet_primitive(dz, dzbar, via)
        defect = float(defect) / scale
        logger.debug("Kernel built", side=side, normalization=normalization, defect=defect)
        return Kernel(dz.exponents, (g,), defect=defect, normalization=FLOQUET)

    if normalization not in (FLOQUET, BASEPOINT):
        raise InvalidInputError(f"unknown normalization {normalization!r}")
    if trivial is None:
        raise InvalidInputError(
            "basepoint normalization requires omega to have multipliers (1, 1)",
            multipliers=[str(k) for k in dz.multipliers()],
        )
    f = dz.to_periodic()
    h = dzbar.to_periodic()
    if max(abs(f.zero_mode), abs(h.zero_mode)) > settings.PERIOD_TOL * scale:
        periods = period_integrals(psi, pair, side)
        metrics.error_counter.labels(error_type='obstruction').inc()
        logger.warning("Kernel obstructed", side=side, periods=[str(p) for p in periods])
        raise ObstructionError(
            f"omega has trivial multipliers and nonzero periods {periods[0]:.3e}, {periods[1]:.3e}",
            periods=[str(p) for p in periods],
        )
    if normalization == FLOQUET:
        logger.info(
            "Trivial kernel multipliers with vanishing periods, fixing omega at the basepoint",
            side=side,
            z0=str(complex(z0)),
        )
    cutoff = max(f.cutoff, h.cutoff)
    d, dbar = lattice.symbols(cutoff)
    f_coeffs = f.resize(cutoff).coeffs
    h_coeffs = h.resize(cutoff).coeffs
    nonzero = np.abs(d) > 0
    coeffs = np.zeros_like(f_coeffs)
    coeffs[nonzero] = f_coeffs[nonzero] / d[nonzero]
    g = PeriodicField(lattice, coeffs)
    defect = float(np.linalg.norm(dbar * coeffs - h_coeffs)) / scale
    g = g + (complex(c) - complex(g(z0)))
    logger.debug("Kernel built", side=side, normalization=BASEPOINT, defect=defect)
    return Kernel(ZERO_EXPONENTS, (g,), defect=defect, normalization=BASEPOINT)


def omega_defect(w, psi, pair, side=DIRECT):
    """Relative residual of both defining equations of omega."""
    dz, dzbar = _integrands(psi, pair, side)
    target = w.rebase(dz.exponents)
    cutoff = max(target.cutoff, dz.cutoff)
    target = target.resize(cutoff)
    holo = target.d_component(0) - dz[0].resize(cutoff)
    anti = target.dbar_component(0) - dzbar[0].resize(cutoff)
    scale = max(dz.norm() + dzbar.norm(), 1e-300)
    return max(holo.norm(), anti.norm()) / scale


@dataclass(frozen=True, eq=False)
class Variation:
    """First-order variation of (p, q), of U, and of one wave function."""

    delta_p: PeriodicField
    delta_q: PeriodicField
    delta_psi: QuasiPeriodicFunction

    @property
    def delta_u(self):
        return -self.delta_q


def potential_variation(pair):
    """(delta p, delta q) = (-PsiD_1 PhiD_2, PsiD_2 PhiD_1) as periodic fields."""
    delta_p = -quasi_product(pair.PsiD, pair.PhiD, 0, 1).to_periodic()
    delta_q = quasi_product(pair.PsiD, pair.PhiD, 1, 0).to_periodic()
    return delta_p, delta_q


def deform(pair, psi, w):
    """
    Variation generated by ``pair`` on the wave function ``psi`` with kernel ``w``.

    delta psi = omega * PsiD keeps the multipliers of psi.
    """
    delta_p, delta_q = potential_variation(pair)
    product = QuasiPeriodicFunction(
        w.exponents + pair.PsiD.exponents,
        tuple(mul_fields(w[0], c, cutoff='full') for c in pair.PsiD.components),
    )
    delta_psi = product.rebase(psi.exponents)
    return Variation(delta_p, delta_q, delta_psi)


def deform_dual(pair, phi, w_dual):
    """delta phi = omega_dual * PhiD, rebased onto the exponents of phi."""
    delta_p, delta_q = potential_variation(pair)
    product = QuasiPeriodicFunction(
        w_dual.exponents + pair.PhiD.exponents,
        tuple(mul_fields(w_dual[0], c, cutoff='full') for c in pair.PhiD.components),
    )
    return Variation(delta_p, delta_q, product.rebase(phi.exponents))


def linearized_defect(pair, psi, variation, side=DIRECT):
    """
    Residual of the linearized system satisfied by (delta p, delta q, delta psi).

    Direct side:  dbar dpsi_1 - p dpsi_2 - dp psi_2 and d dpsi_2 - q dpsi_1 - dq psi_1.
    Dual side:    dbar dphi_1 + q dphi_2 + dq phi_2 and d dphi_2 + p dphi_1 + dp phi_1.
    """
    pq = pair.pq
    delta = variation.delta_psi
    mu, nu = delta.exponents.mu, delta.exponents.nu
    base = psi.rebase(delta.exponents)
    if side == DIRECT:
        upper, lower, delta_upper, delta_lower, sign = pq.p, pq.q, variation.delta_p, variation.delta_q, -1
    elif side == DUAL:
        upper, lower, delta_upper, delta_lower, sign = pq.q, pq.p, variation.delta_q, variation.delta_p, 1
    else:
        raise InvalidInputError(f"unknown kernel side {side!r}")

    first = delta[0].apply_shifted('dzbar', nu) + sign * (
        mul_fields(upper, delta[1], cutoff='full') + mul_fields(delta_upper, base[1], cutoff='full')
    )
    second = delta[1].apply_shifted('dz', mu) + sign * (
        mul_fields(lower, delta[0], cutoff='full') + mul_fields(delta_lower, base[0], cutoff='full')
    )
    scale = max(delta.norm(), 1e-300)
    return float(np.sqrt(first.norm() ** 2 + second.norm() ** 2) / scale)


def _windowed_match(first, second, window):
    inside = first[np.abs(first) <= window]
    if len(inside) == 0:
        return 0.0
    if len(inside) > len(second):
        return np.inf
    costs = np.abs(inside[:, None] - second[None, :])
    rows, cols = linear_sum_assignment(costs)
    return float(costs[rows, cols].max())


def isospectral_defect(potential, delta_u, mu, eps, cutoff=12, window=3.0):
    """
    Matched distance between the mu-slices of U + eps delta U and of U.
    """
    if eps <= 0:
        raise InvalidInputError(f"eps must be positive, got {eps}")
    base = slice_spectrum(potential, mu, cutoff=cutoff).nus
    moved = slice_spectrum(potential.perturbed(delta_u, eps), mu, cutoff=cutoff).nus
    defect = max(_windowed_match(base, moved, window), _windowed_match(moved, base, window))
    logger.debug("Isospectral defect", mu=str(mu), eps=eps, defect=defect)
    return defect

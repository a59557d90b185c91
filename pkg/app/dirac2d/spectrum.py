"""
Kernel dimensions at fixed multipliers and mu-slices of the multiplier set.

A slice at fixed mu eliminates psi_2 = -(d/dz + mu)^{-1} U psi_1 and leaves the
standard eigenproblem T(mu) psi_1 = nu psi_1 with
T(mu) = -d/dzbar - conj(U) (d/dz + mu)^{-1} U. Both the eigensolve and the
singular value count run block by block over the mode-coupling components.
"""
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
import scipy.linalg
import structlog

from config import settings
from core import metrics
from core.errors import InvalidInputError, NumericalError, ResonanceError, SpuriousModeError
from core.fields import PeriodicField
from core.quasi import ExponentPair, QuasiPeriodicFunction, exponents_for, multipliers_of
from dirac2d.operator import (
    block_dirac_matrix, convolution_matrix, coupling_offsets, flat_modes, leakage_rows, mode_blocks,
)

logger = structlog.get_logger(__name__)


@dataclass(frozen=True, eq=False)
class Eigenpair:
    nu: complex
    residual: float
    mode: Tuple[int, int]
    index: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray


@dataclass(frozen=True, eq=False)
class SliceSpectrum:
    """All accepted eigenvalues nu of T(mu), with their spinors."""

    lattice: object
    mu: complex
    cutoff: int
    adjoint: bool
    pairs: List[Eigenpair] = field(default_factory=list)

    def __len__(self):
        return len(self.pairs)

    @property
    def nus(self):
        return np.array([p.nu for p in self.pairs], dtype=complex)

    @property
    def residuals(self):
        return np.array([p.residual for p in self.pairs])

    @property
    def modes(self):
        return [p.mode for p in self.pairs]

    def exponents(self, index):
        return ExponentPair(self.mu, self.pairs[index].nu)

    def multipliers(self, index):
        return multipliers_of(self.exponents(index), self.lattice)

    def index_of(self, mode):
        """Index of the eigenpair whose spinor is dominated by ``mode``."""
        mode = tuple(mode)
        for i, pair in enumerate(self.pairs):
            if pair.mode == mode:
                return i
        raise InvalidInputError(f"no eigenpair dominated by mode {mode} at mu={self.mu}")

    def spinor(self, index):
        pair = self.pairs[index]
        size = 2 * self.cutoff + 1
        first = np.zeros(size * size, dtype=complex)
        second = np.zeros(size * size, dtype=complex)
        first[pair.index] = pair.psi1
        second[pair.index] = pair.psi2
        return QuasiPeriodicFunction(self.exponents(index), (
            PeriodicField(self.lattice, first.reshape(size, size)),
            PeriodicField(self.lattice, second.reshape(size, size)),
        ))


def _check_resonance(d, mu, cutoff, tol):
    shift = d + mu
    small = np.abs(shift) < tol * (1 + abs(mu))
    if small.any():
        m, n = flat_modes(cutoff)
        k = int(np.flatnonzero(small)[0])
        mode = (int(m[k]), int(n[k]))
        metrics.error_counter.labels(error_type='resonance').inc()
        raise ResonanceError(f"d/dz + {mu} is not invertible at mode {mode}", mode=mode)
    return shift


def _normalize(psi1, psi2):
    scale = np.sqrt(np.sum(np.abs(psi1) ** 2 + np.abs(psi2) ** 2))
    stacked = np.concatenate([psi1, psi2])
    peak = stacked[np.argmax(np.abs(stacked))]
    phase = peak / abs(peak) if peak != 0 else 1.0
    return psi1 / (scale * phase), psi2 / (scale * phase)


def slice_spectrum(potential, mu, adjoint=False, cutoff=None, residual_tol=None):
    """
    Eigenvalues nu of T(mu) with full-system residuals below ``residual_tol``.

    Eigenpairs are ordered by |nu|, then arg nu, then block order.
    """
    cutoff = cutoff or settings.DEFAULT_CUTOFF
    residual_tol = settings.SLICE_RESIDUAL_TOL if residual_tol is None else residual_tol
    if cutoff < 1:
        raise InvalidInputError(f"cutoff must be at least 1, got {cutoff}")
    mu = complex(mu)
    lattice = potential.lattice
    d, dbar = lattice.symbols(cutoff)
    d, dbar = d.ravel(), dbar.ravel()
    shift = _check_resonance(d, mu, cutoff, settings.RESONANCE_TOL)
    first, second = potential.entries(adjoint)
    offsets = coupling_offsets(potential)
    m_all, n_all = flat_modes(cutoff)

    pairs = []
    rejected = 0
    metrics.slice_counter.inc()
    with metrics.eigensolve_duration.time():
        for block in mode_blocks(potential, cutoff, offsets=offsets):
            idx = block.index
            a = convolution_matrix(first, block.m, block.n, block.m, block.n)
            b = convolution_matrix(second, block.m, block.n, block.m, block.n)
            inverse = 1.0 / shift[idx]
            T = -np.diag(dbar[idx]) - b @ (inverse[:, None] * a)
            try:
                nus, vectors = scipy.linalg.eig(T)
            except (np.linalg.LinAlgError, ValueError) as e:
                metrics.error_counter.labels(error_type='eigensolve').inc()
                logger.error(
                    "Slice eigensolve failed",
                    mu=str(mu),
                    block_size=len(block),
                    error=str(e),
                    exception_type=type(e).__name__,
                )
                raise NumericalError(f"eigensolver failed at mu={mu}: {e}") from e
            psi2 = -(inverse[:, None] * (a @ vectors))

            rm, rn = leakage_rows(offsets, block, cutoff)
            a_out = convolution_matrix(first, rm, rn, block.m, block.n)
            b_out = convolution_matrix(second, rm, rn, block.m, block.n)
            top = a @ vectors + shift[idx][:, None] * psi2
            bottom = -(dbar[idx][:, None] + nus[None, :]) * vectors + b @ psi2
            leak = np.sum(np.abs(a_out @ vectors) ** 2 + np.abs(b_out @ psi2) ** 2, axis=0)
            norms = np.sqrt(np.sum(np.abs(vectors) ** 2 + np.abs(psi2) ** 2, axis=0))
            residuals = np.sqrt(
                np.sum(np.abs(top) ** 2 + np.abs(bottom) ** 2, axis=0) + leak
            ) / norms

            for j in range(len(nus)):
                if not np.isfinite(nus[j]) or residuals[j] > residual_tol:
                    rejected += 1
                    continue
                psi1_j, psi2_j = _normalize(vectors[:, j], psi2[:, j])
                k = int(np.argmax(np.abs(psi1_j) ** 2 + np.abs(psi2_j) ** 2))
                pairs.append(Eigenpair(
                    nu=complex(nus[j]),
                    residual=float(residuals[j]),
                    mode=(int(m_all[idx[k]]), int(n_all[idx[k]])),
                    index=idx,
                    psi1=psi1_j,
                    psi2=psi2_j,
                ))

    order = sorted(
        range(len(pairs)),
        key=lambda i: (round(abs(pairs[i].nu), 12), round(float(np.angle(pairs[i].nu)), 12), i),
    )
    logger.debug(
        "Slice solved", mu=str(mu), cutoff=cutoff, adjoint=adjoint,
        accepted=len(pairs), rejected=rejected,
    )
    return SliceSpectrum(lattice, mu, cutoff, adjoint, [pairs[i] for i in order])


def floquet_function(potential, mu, index=None, adjoint=False, cutoff=None, mode=None,
                     residual_tol=None):
    """
    Floquet spinor of one slice eigenpair, scaled to sup-norm 1.

    The eigenpair is addressed by position in the slice or by its dominant mode.
    """
    residual_tol = settings.FUNCTION_RESIDUAL_TOL if residual_tol is None else residual_tol
    spectrum = slice_spectrum(potential, mu, adjoint, cutoff, residual_tol=np.inf)
    if mode is not None:
        index = spectrum.index_of(mode)
    if index is None or not 0 <= index < len(spectrum):
        raise InvalidInputError(f"eigenpair index {index} out of range (slice has {len(spectrum)})")
    pair = spectrum.pairs[index]
    if pair.residual > residual_tol:
        metrics.error_counter.labels(error_type='spurious_mode').inc()
        raise SpuriousModeError(
            f"eigenpair {index} at mu={mu} has residual {pair.residual:.3e}",
            residual=pair.residual,
        )
    psi = spectrum.spinor(index)
    return psi.scale(1.0 / psi.sup_norm())


def _singular_values(potential, exponents, adjoint, cutoff):
    values = [
        scipy.linalg.svdvals(block_dirac_matrix(potential, exponents, block, adjoint, cutoff))
        for block in mode_blocks(potential, cutoff)
    ]
    return np.sort(np.concatenate(values))


def kernel_singular_values(potential, multipliers, k=8, adjoint=False, cutoff=None):
    """The k smallest singular values of D at the principal-log exponents."""
    cutoff = cutoff or settings.DEFAULT_CUTOFF
    exponents = exponents_for(multipliers, potential.lattice)
    return _singular_values(potential, exponents, adjoint, cutoff)[:k]


def kernel_dimension(potential, multipliers, adjoint=False, cutoff=None, rtol=None, atol=None):
    """
    Numerical kernel dimension: singular values below max(atol, rtol * sigma_max).
    """
    cutoff = cutoff or settings.DEFAULT_CUTOFF
    rtol = settings.KERNEL_RTOL if rtol is None else rtol
    exponents = exponents_for(multipliers, potential.lattice)
    values = _singular_values(potential, exponents, adjoint, cutoff)
    threshold = max(atol or 0.0, rtol * values[-1])
    count = int(np.sum(values < threshold))
    logger.debug(
        "Kernel dimension",
        multipliers=[str(complex(x)) for x in multipliers],
        adjoint=adjoint,
        count=count,
        threshold=threshold,
    )
    return count

"""
Truncated Dirac operators D = [[U, d/dz + mu], [-(d/dzbar + nu), conj U]].

Coefficient vectors are flattened mode boxes |m|, |n| <= N in row-major order.
Multiplication blocks are convolution matrices, derivative blocks diagonal.
The adjoint operator swaps U and conj U.
"""
from dataclasses import dataclass

import numpy as np
import structlog
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from config import settings
from core.errors import InvalidInputError
from core.fields import PeriodicField, mul_fields
from core.lattice import mode_grid
from core.quasi import QuasiPeriodicFunction

logger = structlog.get_logger(__name__)

REALITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiracPotential:
    field: PeriodicField
    real_reduction: bool = False

    def __post_init__(self):
        if self.real_reduction:
            scale = max(self.field.norm(), 1e-300)
            defect = (self.field - self.field.conj()).norm()
            if defect > REALITY_TOL * scale:
                raise InvalidInputError(
                    f"potential flagged real but |U - conj U| = {defect:.3e}"
                )

    @classmethod
    def constant(cls, lattice, value, cutoff=1):
        value = complex(value)
        return cls(PeriodicField.constant(lattice, value, cutoff), real_reduction=value.imag == 0)

    @property
    def lattice(self):
        return self.field.lattice

    @property
    def cutoff(self):
        return self.field.cutoff

    def entries(self, adjoint=False):
        """Diagonal entries (upper-left, lower-right) of D or of its adjoint."""
        if adjoint:
            return self.field.conj(), self.field
        return self.field, self.field.conj()

    def perturbed(self, delta, eps):
        """U + eps * delta as a new potential."""
        return DiracPotential(self.field + delta * eps)

    def __repr__(self):
        return f"DiracPotential(cutoff={self.cutoff}, real_reduction={self.real_reduction})"


def flat_modes(cutoff):
    m, n = mode_grid(cutoff)
    return m.ravel(), n.ravel()


def convolution_matrix(field, rows_m, rows_n, cols_m, cols_n):
    """Matrix of f * (.) from the column modes to the row modes."""
    N = field.cutoff
    dm = rows_m[:, None] - cols_m[None, :]
    dn = rows_n[:, None] - cols_n[None, :]
    inside = (np.abs(dm) <= N) & (np.abs(dn) <= N)
    matrix = np.zeros(dm.shape, dtype=complex)
    matrix[inside] = field.coeffs[dm[inside] + N, dn[inside] + N]
    return matrix


def coupling_offsets(potential, tol=None):
    """Mode offsets through which U or conj U couple coefficients."""
    tol = settings.COUPLING_TOL if tol is None else tol
    coeffs = potential.field.coeffs
    peak = np.max(np.abs(coeffs))
    if peak == 0:
        return np.zeros((0, 2), dtype=int)
    m, n = mode_grid(potential.cutoff)
    support = np.abs(coeffs) > tol * peak
    offsets = np.stack([m[support], n[support]], axis=1)
    return np.unique(np.concatenate([offsets, -offsets]), axis=0)


@dataclass(frozen=True, eq=False)
class ModeBlock:
    """A set of modes closed under multiplication by U and conj U."""

    index: np.ndarray
    m: np.ndarray
    n: np.ndarray

    def __len__(self):
        return len(self.index)


def mode_blocks(potential, cutoff, tol=None, offsets=None):
    """Connected components of the mode-coupling graph on the box."""
    offsets = coupling_offsets(potential, tol) if offsets is None else offsets
    m, n = flat_modes(cutoff)
    size = 2 * cutoff + 1
    total = size * size
    sources, targets = [], []
    for dm, dn in offsets:
        if dm == 0 and dn == 0:
            continue
        tm, tn = m + dm, n + dn
        valid = (np.abs(tm) <= cutoff) & (np.abs(tn) <= cutoff)
        sources.append(np.flatnonzero(valid))
        targets.append((tm[valid] + cutoff) * size + (tn[valid] + cutoff))
    if sources:
        rows = np.concatenate(sources)
        cols = np.concatenate(targets)
    else:
        rows = cols = np.zeros(0, dtype=int)
    adjacency = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(total, total))
    count, labels = connected_components(adjacency, directed=False)
    order = np.argsort(labels, kind='stable')
    splits = np.cumsum(np.bincount(labels, minlength=count))[:-1]
    blocks = [ModeBlock(idx, m[idx], n[idx]) for idx in np.split(order, splits)]
    logger.debug("Mode blocks", cutoff=cutoff, blocks=count, largest=max(len(b) for b in blocks))
    return blocks


def leakage_rows(offsets, block, cutoff):
    """Modes outside the box reached from ``block`` by one multiplication."""
    if len(offsets) == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    rm = (block.m[:, None] + offsets[None, :, 0]).ravel()
    rn = (block.n[:, None] + offsets[None, :, 1]).ravel()
    outside = (np.abs(rm) > cutoff) | (np.abs(rn) > cutoff)
    rows = np.unique(np.stack([rm[outside], rn[outside]], axis=1), axis=0)
    if len(rows) == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    return rows[:, 0], rows[:, 1]


def block_dirac_matrix(potential, exponents, block, adjoint=False, cutoff=None):
    cutoff = cutoff or settings.DEFAULT_CUTOFF
    first, second = potential.entries(adjoint)
    d, dbar = potential.lattice.symbols(cutoff)
    d = d.ravel()[block.index]
    dbar = dbar.ravel()[block.index]
    return np.block([
        [convolution_matrix(first, block.m, block.n, block.m, block.n), np.diag(d + exponents.mu)],
        [-np.diag(dbar + exponents.nu), convolution_matrix(second, block.m, block.n, block.m, block.n)],
    ])


def assemble_dirac(potential, exponents, adjoint=False, cutoff=None):
    """
    Dense matrix of D(mu, nu) (or of the adjoint) on the full mode box.
    """
    cutoff = cutoff or settings.DEFAULT_CUTOFF
    m, n = flat_modes(cutoff)
    everything = ModeBlock(np.arange(len(m)), m, n)
    return block_dirac_matrix(potential, exponents, everything, adjoint, cutoff)


def apply_dirac(potential, psi, adjoint=False):
    """
    D psi computed with exact products; returns a spinor with psi's exponents.
    """
    if len(psi) != 2:
        raise InvalidInputError("the Dirac operator acts on two-component spinors")
    first, second = potential.entries(adjoint)
    mu, nu = psi.exponents.mu, psi.exponents.nu
    psi1, psi2 = psi.components
    top = mul_fields(first, psi1, cutoff='full') + psi2.apply_shifted('dz', mu)
    bottom = -psi1.apply_shifted('dzbar', nu) + mul_fields(second, psi2, cutoff='full')
    return QuasiPeriodicFunction(psi.exponents, (top, bottom))


def dirac_residual(potential, psi, adjoint=False, relative=False):
    """L2 norm of D psi over the period cell, optionally divided by |psi|."""
    residual = apply_dirac(potential, psi, adjoint).norm()
    if relative:
        return residual / max(psi.norm(), 1e-300)
    return residual

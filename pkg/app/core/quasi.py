"""
Quasi-periodic functions exp(mu z + nu conj(z)) * periodic part, and the
dictionary between exponent pairs and Floquet multipliers.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import structlog

from config import settings
from core.errors import InvalidInputError
from core.fields import PeriodicField, mul_fields
from core.lattice import require_same_lattice

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class ExponentPair:
    mu: complex
    nu: complex

    def __post_init__(self):
        object.__setattr__(self, 'mu', complex(self.mu))
        object.__setattr__(self, 'nu', complex(self.nu))

    def __add__(self, other):
        return ExponentPair(self.mu + other.mu, self.nu + other.nu)

    def __sub__(self, other):
        return ExponentPair(self.mu - other.mu, self.nu - other.nu)

    def __neg__(self):
        return ExponentPair(-self.mu, -self.nu)

    def conj(self):
        """Exponents of the complex conjugate function."""
        return ExponentPair(self.nu.conjugate(), self.mu.conjugate())

    def logs(self, lattice):
        """mu gamma_j + nu conj(gamma_j) for j = 1, 2."""
        return tuple(self.mu * g + self.nu * g.conjugate() for g in lattice.periods)

    def factor(self, z):
        z = np.asarray(z, dtype=complex)
        return np.exp(self.mu * z + self.nu * np.conj(z))


ZERO_EXPONENTS = ExponentPair(0, 0)


def multipliers_of(exponents, lattice):
    """kappa_j = exp(mu gamma_j + nu conj(gamma_j))."""
    log1, log2 = exponents.logs(lattice)
    return complex(np.exp(log1)), complex(np.exp(log2))


def exponents_for(multipliers, lattice):
    """
    Representative exponent pair for given multipliers, using principal logs.
    """
    kappa1, kappa2 = (complex(k) for k in multipliers)
    if kappa1 == 0 or kappa2 == 0:
        raise InvalidInputError("multipliers must be nonzero")
    system = np.array([
        [lattice.gamma1, lattice.gamma1.conjugate()],
        [lattice.gamma2, lattice.gamma2.conjugate()],
    ])
    mu, nu = np.linalg.solve(system, np.log(np.array([kappa1, kappa2])))
    return ExponentPair(mu, nu)


def periodic_mode(delta, lattice, tol=None):
    """
    Return the mode (m, n) with exp(delta) = e_{mn}, or None when the
    exponent difference induces nontrivial multipliers.
    """
    tol = settings.MULTIPLIER_TOL if tol is None else tol
    winding = [log / (2j * np.pi) for log in delta.logs(lattice)]
    scale = 1 + abs(delta.mu) * abs(lattice.gamma1) + abs(delta.nu) * abs(lattice.gamma2)
    rounded = [round(w.real) for w in winding]
    if all(abs(w - r) <= tol * scale for w, r in zip(winding, rounded)):
        return int(rounded[0]), int(rounded[1])
    return None


def same_multipliers(a, b, lattice, tol=None):
    """Whether two exponent pairs induce equal multipliers."""
    return periodic_mode(a - b, lattice, tol) is not None


@dataclass(frozen=True, eq=False)
class QuasiPeriodicFunction:
    """
    Scalar or spinor exp(mu z + nu conj(z)) * (f_1, ..., f_k).
    """

    exponents: ExponentPair
    components: Tuple[PeriodicField, ...]

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise InvalidInputError("a quasi-periodic function needs a component")
        require_same_lattice(*(c.lattice for c in components))
        object.__setattr__(self, 'components', components)

    @property
    def lattice(self):
        return self.components[0].lattice

    @property
    def cutoff(self):
        return max(c.cutoff for c in self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, index):
        return self.components[index]

    def multipliers(self):
        return multipliers_of(self.exponents, self.lattice)

    def __call__(self, z):
        factor = self.exponents.factor(z)
        return np.array([factor * c(z) for c in self.components])

    def on_grid(self, size=None):
        size = size or max(2 * self.cutoff + 1, settings.DEFAULT_GRID)
        factor = self.exponents.factor(self.lattice.grid(size))
        return np.array([factor * c.on_grid(size) for c in self.components])

    def norm(self):
        return float(np.sqrt(sum(c.norm() ** 2 for c in self.components)))

    def sup_norm(self, size=None):
        """Sup of |periodic parts| on the grid."""
        return max(c.sup_norm(size) for c in self.components)

    def with_components(self, components):
        return QuasiPeriodicFunction(self.exponents, tuple(components))

    def scale(self, factor):
        return self.with_components(c * factor for c in self.components)

    def resize(self, cutoff):
        return self.with_components(c.resize(cutoff) for c in self.components)

    def conj(self):
        return QuasiPeriodicFunction(self.exponents.conj(), tuple(c.conj() for c in self.components))

    def rebase(self, exponents, cutoff=None, tol=None):
        """
        Rewrite the function with an equivalent exponent pair.

        The exponent difference must be a Fourier mode; the periodic parts are
        shifted by that mode and keep every coefficient unless ``cutoff`` is set.
        """
        mode = periodic_mode(self.exponents - exponents, self.lattice, tol)
        if mode is None:
            raise InvalidInputError(
                f"exponents {self.exponents} and {exponents} induce different multipliers"
            )
        if mode == (0, 0):
            shifted = self.components if cutoff is None else tuple(c.resize(cutoff) for c in self.components)
            return QuasiPeriodicFunction(exponents, shifted)
        return QuasiPeriodicFunction(
            exponents, tuple(c.shift_modes(mode[0], mode[1], cutoff) for c in self.components)
        )

    def to_periodic(self, cutoff=None, tol=None):
        """Periodic field of a scalar function whose multipliers are trivial."""
        return self.rebase(ZERO_EXPONENTS, cutoff, tol).components[0]

    def d_component(self, index):
        """d/dz of one component, as a periodic part with the same exponents."""
        return self.components[index].apply_shifted('dz', self.exponents.mu)

    def dbar_component(self, index):
        return self.components[index].apply_shifted('dzbar', self.exponents.nu)

    def __repr__(self):
        return (
            f"QuasiPeriodicFunction(mu={self.exponents.mu}, nu={self.exponents.nu}, "
            f"components={len(self.components)}, cutoff={self.cutoff})"
        )


def quasi_product(a, b, index_a=0, index_b=0, cutoff='full'):
    """Scalar product of one component of ``a`` with one component of ``b``."""
    field = mul_fields(a.components[index_a], b.components[index_b], cutoff=cutoff)
    return QuasiPeriodicFunction(a.exponents + b.exponents, (field,))


def scalar(exponents, field):
    return QuasiPeriodicFunction(exponents, (field,))


def star_involution(psi):
    """psi* = (conj psi_2, -conj psi_1) with exponents (conj nu, conj mu)."""
    if len(psi) != 2:
        raise InvalidInputError("the star involution acts on two-component spinors")
    return QuasiPeriodicFunction(
        psi.exponents.conj(), (psi.components[1].conj(), -psi.components[0].conj())
    )


def add_scalars(terms, exponents, cutoff=None):
    """Sum scalar quasi-periodic terms after rebasing them onto ``exponents``."""
    total = None
    for term in terms:
        field = term.rebase(exponents).components[0]
        total = field if total is None else total + field
    if cutoff is not None:
        total = total.resize(cutoff)
    return QuasiPeriodicFunction(exponents, (total,))


def spinor(exponents, first, second):
    return QuasiPeriodicFunction(exponents, (first, second))


def constant_spinor(lattice, exponents, values, cutoff=1):
    return QuasiPeriodicFunction(
        exponents, tuple(PeriodicField.constant(lattice, v, cutoff) for v in values)
    )


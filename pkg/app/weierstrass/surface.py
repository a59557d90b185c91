"""
Immersed tori in R^4 from pairs of Floquet spinors.

Coordinates are the real primitives of

    x1_z = (i/2)(conj Phi_2 conj Psi_2 + Phi_1 Psi_1)
    x2_z = (1/2)(conj Phi_2 conj Psi_2 - Phi_1 Psi_1)
    x3_z = (1/2)(conj Phi_2 Psi_1 + Phi_1 conj Psi_2)
    x4_z = (i/2)(conj Phi_2 Psi_1 - Phi_1 conj Psi_2)

and are stored as a periodic part plus a linear part, so that surfaces which do
not close up remain representable.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import structlog

from config import settings
from core.errors import InvalidInputError, NumericalError
from core.fields import PeriodicField
from core.quasi import periodic_mode, quasi_product

logger = structlog.get_logger(__name__)

CLOSING_TOL = 1e-10


def _require_weierstrass_data(Psi, Phi, tol):
    for kappa in Psi.multipliers():
        if abs(kappa.imag) > tol * abs(kappa):
            raise InvalidInputError(
                f"multipliers of Psi must be real, got {Psi.multipliers()}"
            )
    if periodic_mode(Psi.exponents + Phi.exponents, Psi.lattice, tol) is None:
        raise InvalidInputError("multipliers of Phi must be reciprocal to those of Psi")


def coordinate_derivatives(Psi, Phi, tol=None):
    """The four periodic fields x^k_z."""
    tol = settings.MULTIPLIER_TOL if tol is None else tol
    _require_weierstrass_data(Psi, Phi, tol)
    Psi_bar, Phi_bar = Psi.conj(), Phi.conj()

    def product(a, ia, b, ib):
        return quasi_product(a, b, ia, ib).to_periodic(tol=tol)

    outer = product(Phi_bar, 1, Psi_bar, 1)
    inner = product(Phi, 0, Psi, 0)
    mixed = product(Phi_bar, 1, Psi, 0)
    crossed = product(Phi, 0, Psi_bar, 1)
    return (
        (outer + inner) * 0.5j,
        (outer - inner) * 0.5,
        (mixed + crossed) * 0.5,
        (mixed - crossed) * 0.5j,
    )


@dataclass(frozen=True, eq=False)
class ImmersedTorus:
    """
    x^k(z) = periodic_k(z) + <linear_k, (x, y)> + offset_k.
    """

    periodic: tuple
    linear: np.ndarray
    offset: np.ndarray = field(default_factory=lambda: np.zeros(4))

    @property
    def lattice(self):
        return self.periodic[0].lattice

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        values = [
            p(z).real + self.linear[k, 0] * z.real + self.linear[k, 1] * z.imag + self.offset[k]
            for k, p in enumerate(self.periodic)
        ]
        return np.array(values)

    def on_grid(self, size=None):
        """Coordinates on lattice.grid(size), shape (4, size, size)."""
        size = size or settings.DEFAULT_GRID
        z = self.lattice.grid(size)
        values = [
            p.on_grid(size).real + self.linear[k, 0] * z.real + self.linear[k, 1] * z.imag + self.offset[k]
            for k, p in enumerate(self.periodic)
        ]
        return np.array(values)

    def max_imaginary(self, size=None):
        size = size or settings.DEFAULT_GRID
        return max(float(np.max(np.abs(p.on_grid(size).imag))) for p in self.periodic)

    def period_residuals(self):
        """|x^k(gamma_j) - x^k(0)| as a (4, 2) array."""
        periods = np.array([[g.real, g.imag] for g in self.lattice.periods])
        return np.abs(self.linear @ periods.T)

    def is_closed(self, tol=CLOSING_TOL):
        return bool(np.all(self.period_residuals() < tol))

    def translated(self, vector):
        return ImmersedTorus(self.periodic, self.linear, self.offset + np.asarray(vector, dtype=float))


def integrate_surface(xz):
    """
    Real primitives of x^k_z dz + conj(x^k_z) dzbar with x(0) = 0.
    """
    if len(xz) != 4:
        raise InvalidInputError(f"need four coordinate derivatives, got {len(xz)}")
    periodic, linear = [], []
    for g in xz:
        lattice, N = g.lattice, g.cutoff
        d, dbar = lattice.symbols(N)
        coeffs = g.coeffs
        mirrored = np.conj(coeffs[::-1, ::-1])
        safe_d = np.where(d == 0, 1.0, d)
        safe_dbar = np.where(dbar == 0, 1.0, dbar)
        primitive = 0.5 * (coeffs / safe_d + mirrored / safe_dbar)
        primitive[N, N] = 0.0
        field_k = PeriodicField(lattice, primitive)
        field_k = field_k - complex(field_k(0.0)).real
        g0 = g.zero_mode
        periodic.append(field_k)
        linear.append([2 * g0.real, -2 * g0.imag])
    torus = ImmersedTorus(tuple(periodic), np.array(linear))
    logger.debug(
        "Surface integrated",
        closed=torus.is_closed(),
        max_period_residual=float(np.max(torus.period_residuals())),
    )
    return torus


def willmore(potential):
    """4 times the integral of |U|^2 over one period cell."""
    return float(4 * potential.lattice.area * np.sum(np.abs(potential.field.coeffs) ** 2))


@dataclass(frozen=True)
class SphereFit:
    center: np.ndarray
    radius: float
    max_deviation: float


def sphere_fit(torus, size=32):
    """
    Least-squares sphere through the grid points: 2<x, c> + k = |x|^2 with
    r^2 = k + |c|^2.
    """
    points = torus.on_grid(size).reshape(4, -1).T
    system = np.hstack([2 * points, np.ones((len(points), 1))])
    rhs = np.sum(points ** 2, axis=1)
    solution, _, _, _ = scipy.linalg.lstsq(system, rhs)
    center, k = solution[:4], solution[4]
    radius_squared = k + center @ center
    scale = max(float(np.max(np.abs(points))), 1e-300)
    if radius_squared <= (1e-12 * scale) ** 2:
        raise NumericalError(f"degenerate sphere fit (r^2 = {radius_squared:.3e})")
    radius = float(np.sqrt(radius_squared))
    deviation = float(np.max(np.abs(np.linalg.norm(points - center, axis=1) - radius)))
    logger.debug("Sphere fit", radius=radius, max_deviation=deviation)
    return SphereFit(center, radius, deviation)

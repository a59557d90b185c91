"""
x-independent potentials: the Dirac slice problem reduces to the NLS
auxiliary system in y, and Darboux kernels integrate in closed form over x.
"""
import numpy as np
import structlog

from config import settings
from core.errors import InvalidInputError, PoleError
from core.fields import eval_field
from core.quasi import ExponentPair, QuasiPeriodicFunction, quasi_product
from dirac2d.spectrum import slice_spectrum
from spectral1d.monodromy import PeriodicPotential, nls_batch

logger = structlog.get_logger(__name__)

POLE_TOL = 1e-10
SUPPORT_TOL = 1e-14


def _require_rectangular(lattice):
    g1, g2 = lattice.periods
    scale = abs(g1) + abs(g2)
    if abs(g1.imag) > 1e-12 * scale or abs(g2.real) > 1e-12 * scale:
        raise InvalidInputError(f"reduction needs gamma1 real and gamma2 imaginary, got {lattice}")
    return g1.real, g2.imag


def _require_y_only(field, tol=SUPPORT_TOL):
    N = field.cutoff
    off_axis = np.delete(field.coeffs, N, axis=0)
    if off_axis.size and np.max(np.abs(off_axis)) > tol * max(field.norm(), 1e-300):
        raise InvalidInputError("potential depends on x: coefficients outside the modes (0, n)")


def y_profile(potential):
    """U(y) along x = 0 as a 1D periodic potential."""
    field = potential.field
    _require_y_only(field)
    _, height = _require_rectangular(field.lattice)
    return PeriodicPotential(lambda y: eval_field(field, 1j * np.asarray(y)), height)


def monodromy_eigenvalues(M):
    """
    Eigenvalues (rho, 1/rho) of a unimodular 2x2 monodromy, rho the root of
    larger modulus. The small one is taken from det M = 1, not from M.
    """
    half = np.trace(M) / 2
    root = np.sqrt(half * half - 1 + 0j)
    rho = half + root if abs(half + root) >= abs(half - root) else half - root
    return np.array([rho, 1 / rho])


def reduction_crosscheck(potential, k, cutoff=None, window=None, steps=None):
    """
    Largest |Log(kappa2 / kappa)| between the y-multiplier of each slice
    eigenpair at mu = k/2 and the nearest of monodromy_eigenvalues of the
    NLS monodromy at
    K = mu + nu + 2 pi i m / gamma1, m the x-mode of the eigenpair.
    """
    window = settings.CLOUD_WINDOW if window is None else window
    profile = y_profile(potential)
    width, _ = _require_rectangular(potential.lattice)
    mu = complex(k) / 2
    spectrum = slice_spectrum(potential, mu, cutoff=cutoff)
    selected = [i for i, pair in enumerate(spectrum.pairs) if abs(pair.nu) <= window]
    if not selected:
        logger.warning("No slice eigenvalues in window", k=str(complex(k)), window=window)
        return 0.0
    K = np.array([
        mu + spectrum.pairs[i].nu + 2j * np.pi * spectrum.pairs[i].mode[0] / width
        for i in selected
    ])
    monodromies = nls_batch(profile, K, profile.period, steps)
    defect = 0.0
    for i, M in zip(selected, monodromies):
        kappa2 = spectrum.multipliers(i)[1]
        eigenvalues = monodromy_eigenvalues(M)
        defect = max(defect, float(np.min(np.abs(np.log(kappa2 / eigenvalues)))))
    logger.debug("Reduction crosscheck", k=str(complex(k)), pairs=len(selected), defect=defect)
    return defect


def _x_row(field, tol=SUPPORT_TOL):
    """The single x-mode m carrying the field, or None for a zero field."""
    N = field.cutoff
    weights = np.max(np.abs(field.coeffs), axis=1)
    rows = np.flatnonzero(weights > tol * max(float(np.max(weights)), 1e-300))
    if rows.size == 0 or float(np.max(weights)) == 0.0:
        return None
    if rows.size > 1:
        raise InvalidInputError("kernel data depend on x beyond a single Fourier row")
    return int(rows[0]) - N


def _kernel(first, second):
    """
    (first - second) / (mu + nu) after moving the common x-mode of the
    products into the exponents.
    """
    exponents = first.exponents
    rows = {_x_row(term.components[0]) for term in (first, second)} - {None}
    if len(rows) > 1:
        raise InvalidInputError(f"kernel terms sit on different x-modes {sorted(rows)}")
    m = rows.pop() if rows else 0
    field = first.components[0] - second.components[0]
    if m:
        d, dbar = first.lattice.mode_symbols(m, 0)
        exponents = exponents + ExponentPair(d, dbar)
        field = field.shift_modes(-m, 0)
    rate = exponents.mu + exponents.nu
    if abs(rate) < POLE_TOL:
        raise PoleError(f"k(lambda) = k1 within {POLE_TOL:.0e}: kernel has a pole")
    return QuasiPeriodicFunction(exponents, (field / rate,))


def omega_1d(psi, pair):
    """
    Direct kernel for y-only data:
    omega = (PhiD_1 psi_1 - PhiD_2 psi_2) / (k(lambda) - k1), where
    k(lambda) - k1 is the x-exponent mu + nu of the product.
    """
    _require_rectangular(pair.lattice)
    return _kernel(quasi_product(pair.PhiD, psi, 0, 0), quasi_product(pair.PhiD, psi, 1, 1))


def omega_1d_dual(phi, pair):
    """Dual kernel (phi_1 PsiD_1 - phi_2 PsiD_2) / (k(lambda) - k1)."""
    _require_rectangular(pair.lattice)
    return _kernel(quasi_product(phi, pair.PsiD, 0, 0), quasi_product(phi, pair.PsiD, 1, 1))

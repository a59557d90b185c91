"""
Doubly periodic fields stored as truncated Fourier coefficients.
"""
from dataclasses import dataclass

import numpy as np
import structlog
from scipy.signal import fftconvolve

from config import settings
from core.errors import InvalidInputError, ResonanceError
from core.lattice import Lattice, mode_grid, require_same_lattice
from core import metrics

logger = structlog.get_logger(__name__)

HOLOMORPHIC = 'dz'
ANTIHOLOMORPHIC = 'dzbar'


@dataclass(frozen=True, eq=False)
class PeriodicField:
    """
    f(z) = sum c_{mn} e_{mn}(z) with coefficients indexed [m+N, n+N].
    """

    lattice: Lattice
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.ndim != 2 or coeffs.shape[0] != coeffs.shape[1] or coeffs.shape[0] % 2 == 0:
            raise InvalidInputError(f"coefficient array must be (2N+1, 2N+1), got {coeffs.shape}")
        if coeffs.shape[0] < 3:
            raise InvalidInputError("cutoff must be at least 1")
        coeffs.setflags(write=False)
        object.__setattr__(self, 'coeffs', coeffs)

    # construction

    @classmethod
    def zeros(cls, lattice, cutoff):
        if cutoff < 1:
            raise InvalidInputError(f"cutoff must be at least 1, got {cutoff}")
        size = 2 * cutoff + 1
        return cls(lattice, np.zeros((size, size), dtype=complex))

    @classmethod
    def constant(cls, lattice, value, cutoff=1):
        field = np.zeros((2 * cutoff + 1, 2 * cutoff + 1), dtype=complex)
        field[cutoff, cutoff] = value
        return cls(lattice, field)

    @classmethod
    def mode(cls, lattice, m, n, cutoff=None, amplitude=1.0):
        cutoff = max(abs(m), abs(n), 1) if cutoff is None else cutoff
        if max(abs(m), abs(n)) > cutoff:
            raise InvalidInputError(f"mode ({m}, {n}) outside cutoff {cutoff}")
        field = np.zeros((2 * cutoff + 1, 2 * cutoff + 1), dtype=complex)
        field[m + cutoff, n + cutoff] = amplitude
        return cls(lattice, field)

    @classmethod
    def from_samples(cls, lattice, samples, cutoff):
        """Coefficients from samples on the lattice grid ``lattice.grid(P)``."""
        samples = np.asarray(samples, dtype=complex)
        size = samples.shape[0]
        if samples.shape != (size, size) or size < 2 * cutoff + 1:
            raise InvalidInputError(
                f"need a square grid of at least {2 * cutoff + 1} points per axis"
            )
        spectrum = np.fft.fft2(samples) / size ** 2
        m, n = mode_grid(cutoff)
        return cls(lattice, spectrum[m % size, n % size])

    @classmethod
    def from_function(cls, lattice, func, cutoff, grid=None):
        size = grid or max(4 * cutoff + 4, settings.DEFAULT_GRID)
        return cls.from_samples(lattice, func(lattice.grid(size)), cutoff)

    # basic properties

    @property
    def cutoff(self):
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def zero_mode(self):
        return complex(self.coeffs[self.cutoff, self.cutoff])

    def coefficient(self, m, n):
        N = self.cutoff
        if max(abs(m), abs(n)) > N:
            return 0j
        return complex(self.coeffs[m + N, n + N])

    def norm(self):
        """L2 norm of the coefficients (root mean square over the cell)."""
        return float(np.linalg.norm(self.coeffs))

    def sup_norm(self, grid=None):
        return float(np.max(np.abs(self.on_grid(grid))))

    def bandwidth(self, tol=0.0):
        """Largest max(|m|, |n|) carrying a coefficient above ``tol``."""
        m, n = mode_grid(self.cutoff)
        support = np.abs(self.coeffs) > tol
        if not support.any():
            return 0
        return int(np.max(np.maximum(np.abs(m), np.abs(n))[support]))

    # evaluation

    def __call__(self, z):
        return eval_field(self, z)

    def on_grid(self, size=None):
        """Values on ``lattice.grid(size)``, computed by an inverse FFT."""
        N = self.cutoff
        size = size or max(2 * N + 1, settings.DEFAULT_GRID)
        if size < 2 * N + 1:
            return self.resize((size - 1) // 2).on_grid(size)
        padded = np.zeros((size, size), dtype=complex)
        m, n = mode_grid(N)
        padded[m % size, n % size] = self.coeffs
        return np.fft.ifft2(padded) * size ** 2

    # algebra

    def resize(self, cutoff):
        """Truncate or zero-pad to a new cutoff."""
        N = self.cutoff
        if cutoff == N:
            return self
        out = np.zeros((2 * cutoff + 1, 2 * cutoff + 1), dtype=complex)
        keep = min(N, cutoff)
        out[cutoff - keep:cutoff + keep + 1, cutoff - keep:cutoff + keep + 1] = \
            self.coeffs[N - keep:N + keep + 1, N - keep:N + keep + 1]
        return PeriodicField(self.lattice, out)

    def conj(self):
        """conj(f) has coefficients conj(c_{-m,-n})."""
        return PeriodicField(self.lattice, np.conj(self.coeffs[::-1, ::-1]))

    def shift_modes(self, m0, n0, cutoff=None):
        """Multiply by e_{m0 n0}; the default cutoff keeps every coefficient."""
        grown_cutoff = self.cutoff + max(abs(m0), abs(n0))
        grown = np.roll(self.resize(grown_cutoff).coeffs, (m0, n0), axis=(0, 1))
        shifted = PeriodicField(self.lattice, grown)
        return shifted if cutoff is None else shifted.resize(cutoff)

    def _aligned(self, other):
        require_same_lattice(self.lattice, other.lattice)
        cutoff = max(self.cutoff, other.cutoff)
        return self.resize(cutoff).coeffs, other.resize(cutoff).coeffs, cutoff

    def __add__(self, other):
        if isinstance(other, PeriodicField):
            a, b, _ = self._aligned(other)
            return PeriodicField(self.lattice, a + b)
        out = self.coeffs.copy()
        out[self.cutoff, self.cutoff] += other
        return PeriodicField(self.lattice, out)

    __radd__ = __add__

    def __neg__(self):
        return PeriodicField(self.lattice, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PeriodicField):
            return mul_fields(self, other)
        return PeriodicField(self.lattice, self.coeffs * other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, scalar):
        return PeriodicField(self.lattice, self.coeffs / scalar)

    def d(self):
        d, _ = self.lattice.symbols(self.cutoff)
        return PeriodicField(self.lattice, d * self.coeffs)

    def dbar(self):
        _, dbar = self.lattice.symbols(self.cutoff)
        return PeriodicField(self.lattice, dbar * self.coeffs)

    def apply_shifted(self, direction, shift):
        """(d/dz + shift) f or (d/dzbar + shift) f."""
        symbol = _symbol(self.lattice, self.cutoff, direction)
        return PeriodicField(self.lattice, (symbol + shift) * self.coeffs)

    def __repr__(self):
        return f"PeriodicField(cutoff={self.cutoff}, lattice={self.lattice})"


def _symbol(lattice, cutoff, direction):
    d, dbar = lattice.symbols(cutoff)
    if direction == HOLOMORPHIC:
        return d
    if direction == ANTIHOLOMORPHIC:
        return dbar
    raise InvalidInputError(f"unknown derivative direction {direction!r}")


def eval_field(f, z):
    """Truncated Fourier sum at the point(s) z."""
    z = np.asarray(z, dtype=complex)
    kx, ky = f.lattice.wavevectors(f.cutoff)
    phase = np.multiply.outer(z.real, kx) + np.multiply.outer(z.imag, ky)
    return np.sum(f.coeffs * np.exp(1j * phase), axis=(-2, -1))


def mul_fields(f, g, cutoff=None):
    """
    Alias-free product of two fields.

    The full convolution has cutoff N_f + N_g and is exact; it is truncated to
    ``cutoff`` (default max(N_f, N_g)). Pass ``cutoff='full'`` to keep every mode.
    """
    require_same_lattice(f.lattice, g.lattice)
    full = fftconvolve(f.coeffs, g.coeffs, mode='full')
    product = PeriodicField(f.lattice, full)
    if cutoff == 'full':
        return product
    return product.resize(max(f.cutoff, g.cutoff) if cutoff is None else cutoff)


def solve_shifted(direction, shift, g, tol=None):
    """
    Solve (d + shift) f = g mode by mode for d = d/dz or d/dzbar.

    Raises ResonanceError when some retained mode has |symbol + shift| below
    tol * (1 + |shift|).
    """
    tol = settings.RESONANCE_TOL if tol is None else tol
    symbol = _symbol(g.lattice, g.cutoff, direction) + shift
    small = np.abs(symbol) < tol * (1 + abs(shift))
    if small.any():
        index = np.argwhere(small)[0]
        mode = (int(index[0]) - g.cutoff, int(index[1]) - g.cutoff)
        metrics.error_counter.labels(error_type='resonance').inc()
        logger.debug("Resonant shift", direction=direction, shift=str(shift), mode=mode)
        raise ResonanceError(
            f"resonant shift {shift} for {direction} at mode {mode}", mode=mode
        )
    return PeriodicField(g.lattice, g.coeffs / symbol)

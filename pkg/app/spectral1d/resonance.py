"""
Resonant points of Hill operators: energies where the monodromy is +-I
(unglued double points) or a Jordan block with trace +-2 (glued).
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import structlog
from scipy.optimize import brentq, newton

from config import settings
from core import metrics
from core.errors import ConvergenceError, InvalidInputError
from core.io import format_float, write_lines
from spectral1d.monodromy import as_potential, schrodinger_batch

logger = structlog.get_logger(__name__)

DIAGONALIZABLE = 'diagonalizable'
JORDAN = 'jordan'
SIMPLE = 'simple'

ROOT_TOL = 1e-12
DOUBLE_ROOT_TOL = 1e-6
CHUNK = 64


@dataclass(frozen=True)
class ResonantPoint:
    energy: complex
    sign: int
    classification: str
    off_diagonal: float
    trace_defect: float

    def as_dict(self):
        return {
            'energy': [self.energy.real, self.energy.imag],
            'sign': self.sign,
            'classification': self.classification,
            'off_diagonal': self.off_diagonal,
            'trace_defect': self.trace_defect,
        }


def _evaluate(u, energies, steps):
    M, d1, d2 = schrodinger_batch(u, u.period, energies, steps, derivatives=True)
    return np.trace(M, axis1=-2, axis2=-1), d1, d2, M


def classify_root(u, period, energy, sign, steps=None, jordan_tol=None, diagonal_tol=None,
                  trace_tol=None):
    """
    Classify a root of Delta(E) = 2 sign.

    'diagonalizable' when M = sign I, 'jordan' when M - sign I is a nilpotent
    block of size above ``jordan_tol`` at a double root, 'simple' otherwise.
    """
    jordan_tol = settings.JORDAN_TOL if jordan_tol is None else jordan_tol
    diagonal_tol = settings.DIAGONAL_TOL if diagonal_tol is None else diagonal_tol
    trace_tol = settings.TRACE_TOL if trace_tol is None else trace_tol
    u = as_potential(u, period)
    delta, d1, _, M = _evaluate(u, [energy], steps)
    deviation = float(np.max(np.abs(M[0] - sign * np.eye(2))))
    trace_defect = float(abs(delta[0] - 2 * sign))
    if deviation < diagonal_tol:
        classification = DIAGONALIZABLE
    elif deviation > jordan_tol and trace_defect < trace_tol and abs(d1[0]) < DOUBLE_ROOT_TOL:
        classification = JORDAN
    else:
        classification = SIMPLE
    return ResonantPoint(complex(energy), sign, classification, deviation, trace_defect)


def _scan(u, energies, steps, threads):
    chunks = [energies[i:i + CHUNK] for i in range(0, len(energies), CHUNK)]
    with ThreadPoolExecutor(max_workers=max(1, min(threads, len(chunks)))) as pool:
        parts = list(pool.map(lambda chunk: _evaluate(u, chunk, steps)[:3], chunks))
    return tuple(np.concatenate([p[k] for p in parts]) for k in range(3))


def _polish(func, fprime, x0):
    try:
        root = newton(func, complex(x0), fprime=fprime, tol=ROOT_TOL, maxiter=50)
    except (RuntimeError, ZeroDivisionError) as e:
        metrics.error_counter.labels(error_type='non_convergence').inc()
        raise ConvergenceError(f"Newton polish failed near E={x0}: {e}") from e
    return complex(root)


def resonant_points(u, period, window=(0.1, 4.1), sign=None, density=None, steps=None,
                    threads=None):
    """
    Resonant points of Delta(E) = +-2 on a real energy window.

    Double roots are bracketed by sign changes of Re Delta' where Delta is close
    to +-2, refined with brentq and polished by complex Newton on Delta'.
    Simple roots of Delta -+ 2 are classified but not returned.
    """
    density = density or settings.HILL_SCAN_DENSITY
    threads = threads or settings.THREADS
    low, high = (float(w) for w in window)
    if not np.isfinite(low) or not np.isfinite(high) or high <= low:
        raise InvalidInputError(f"window must be a bounded interval, got {window}")
    signs = (1, -1) if sign is None else (int(sign),)
    u = as_potential(u, period)

    energies = np.linspace(low, high, int(np.ceil((high - low) * density)) + 1)
    delta, d1, _ = _scan(u, energies.astype(complex), steps, threads)

    def single(e):
        return _evaluate(u, [e], steps)

    def delta_prime(e):
        return single(e)[1][0]

    def delta_second(e):
        return single(e)[2][0]

    spacing = energies[1] - energies[0]
    found = []
    for i in range(len(energies) - 1):
        a, b = d1[i].real, d1[i + 1].real
        if a == 0.0 or a * b > 0:
            continue
        for s in signs:
            if min(abs(delta[i] - 2 * s), abs(delta[i + 1] - 2 * s)) > 4 * spacing:
                continue
            try:
                bracketed = brentq(lambda e: delta_prime(e).real, energies[i], energies[i + 1],
                                   xtol=ROOT_TOL)
            except ValueError as e:
                raise ConvergenceError(
                    f"no bracketed root in [{energies[i]}, {energies[i + 1]}]"
                ) from e
            root = _polish(delta_prime, delta_second, bracketed)
            point = classify_root(u, u.period, root, s, steps)
            logger.debug(
                "Candidate resonant point",
                energy=str(root),
                sign=s,
                classification=point.classification,
            )
            if point.classification != SIMPLE:
                found.append(point)

    found.sort(key=lambda p: (p.energy.real, p.energy.imag))
    logger.info(
        "Resonant points",
        window=[low, high],
        count=len(found),
        jordan=sum(p.classification == JORDAN for p in found),
    )
    return found


def discriminant_scan(u, period, energies, steps=None, threads=None):
    """Rows (E, Delta, kappa_plus, kappa_minus) with |kappa_plus| >= |kappa_minus|."""
    threads = threads or settings.THREADS
    u = as_potential(u, period)
    energies = np.asarray(energies, dtype=complex)
    chunks = [energies[i:i + CHUNK] for i in range(0, len(energies), CHUNK)]
    with ThreadPoolExecutor(max_workers=max(1, min(threads, len(chunks)))) as pool:
        matrices = list(pool.map(lambda chunk: schrodinger_batch(u, u.period, chunk, steps), chunks))
    rows = []
    for E, M in zip(energies, np.concatenate(matrices)):
        values = sorted(np.linalg.eigvals(M), key=lambda v: (-abs(v), np.angle(v)))
        rows.append((complex(E), complex(np.trace(M)), complex(values[0]), complex(values[1])))
    return rows


SCAN_HEADER = 'E_re,E_im,delta_re,delta_im,kappa_plus_re,kappa_plus_im,kappa_minus_re,kappa_minus_im'


def scan_lines(rows):
    yield SCAN_HEADER
    for row in rows:
        yield ','.join(format_float(part) for value in row for part in (value.real, value.imag))


def write_scan(rows, path):
    write_lines(path, scan_lines(rows))

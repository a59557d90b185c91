"""
Multiplier clouds: sampled subsets of the multiplier set along a mu-contour.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import structlog
from scipy.optimize import linear_sum_assignment

from config import settings
from core import metrics
from core.errors import InvalidInputError, ResonanceError
from core.lattice import require_same_lattice
from core.quasi import ExponentPair, multipliers_of
from dirac2d.spectrum import slice_spectrum

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class MultiplierRecord:
    sample: int
    mu: complex
    nu: complex
    kappa1: complex
    kappa2: complex
    residual: float


@dataclass(frozen=True, eq=False)
class MultiplierCloud:
    lattice: object
    contour: Tuple[complex, ...]
    records: Tuple[MultiplierRecord, ...]
    skipped: Tuple[Tuple[int, str], ...] = ()

    def __len__(self):
        return len(self.records)

    @property
    def skipped_samples(self):
        return {sample for sample, _ in self.skipped}

    def at(self, sample):
        return [r for r in self.records if r.sample == sample]

    def sorted_records(self):
        """Records ordered by (sample, |kappa2|, arg kappa2)."""
        return sorted(
            self.records,
            key=lambda r: (r.sample, round(abs(r.kappa2), 12), round(float(np.angle(r.kappa2)), 12)),
        )


def nu_from_multipliers(mu, kappa1, kappa2, lattice):
    """
    Recover nu from mu and the moduli of the multipliers.

    Re(nu conj(gamma_j)) = log|kappa_j| - Re(mu gamma_j) is a real 2x2 system.
    """
    g1, g2 = lattice.periods
    system = np.array([[g1.real, g1.imag], [g2.real, g2.imag]])
    rhs = np.array([
        np.log(abs(kappa1)) - (mu * g1).real,
        np.log(abs(kappa2)) - (mu * g2).real,
    ])
    re, im = np.linalg.solve(system, rhs)
    return complex(re, im)


def _solve_sample(potential, sample, mu, cutoff, adjoint, convergence_tol, residual_tol):
    metrics.active_workers.inc()
    try:
        coarse = slice_spectrum(potential, mu, adjoint, cutoff, residual_tol)
        fine = slice_spectrum(potential, mu, adjoint, cutoff + 2, residual_tol)
    except ResonanceError as e:
        metrics.cloud_skipped.inc()
        logger.info("Cloud sample skipped", sample=sample, mu=str(mu), mode=e.mode)
        return sample, [], f"resonance at mode {e.mode}"
    finally:
        metrics.active_workers.dec()
    metrics.cloud_samples.inc()

    refined = fine.nus
    records = []
    for i, pair in enumerate(coarse.pairs):
        if len(refined) == 0 or np.min(np.abs(refined - pair.nu)) >= convergence_tol:
            continue
        kappa1, kappa2 = coarse.multipliers(i)
        records.append(MultiplierRecord(sample, mu, pair.nu, kappa1, kappa2, pair.residual))
    logger.debug(
        "Cloud sample solved", sample=sample, mu=str(mu),
        kept=len(records), dropped=len(coarse) - len(records),
    )
    return sample, records, None


def multiplier_cloud(potential, contour, cutoff=None, adjoint=False, threads=None,
                     convergence_tol=None, residual_tol=None):
    """
    Union over contour samples of the slice multipliers that survive the
    cutoff N -> N + 2 convergence filter. Resonant samples are skipped and flagged.
    """
    cutoff = cutoff or settings.DEFAULT_CUTOFF
    threads = threads or settings.THREADS
    convergence_tol = settings.CONVERGENCE_TOL if convergence_tol is None else convergence_tol
    contour = tuple(complex(mu) for mu in contour)
    if not contour:
        raise InvalidInputError("contour needs at least one sample")

    start = time.time()
    with ThreadPoolExecutor(max_workers=max(1, min(threads, len(contour)))) as pool:
        results = list(pool.map(
            lambda job: _solve_sample(
                potential, job[0], job[1], cutoff, adjoint, convergence_tol, residual_tol
            ),
            enumerate(contour),
        ))

    records, skipped = [], []
    for sample, sample_records, reason in results:
        records.extend(sample_records)
        if reason is not None:
            skipped.append((sample, reason))
    logger.info(
        "Multiplier cloud computed",
        samples=len(contour),
        records=len(records),
        skipped=len(skipped),
        cutoff=cutoff,
        duration_ms=round((time.time() - start) * 1000, 1),
    )
    return MultiplierCloud(potential.lattice, contour, tuple(records), tuple(skipped))


def _log_ratio(a, b):
    """|Log(a / b)| from moduli and arguments; exactly 0 when a == b."""
    phase = np.angle(a) - np.angle(b)
    phase = (phase + np.pi) % (2 * np.pi) - np.pi
    return np.hypot(np.log(np.abs(a)) - np.log(np.abs(b)), phase)


def _pair_costs(first, second):
    """max_j |Log(kappa_j / kappa'_j)| for every record pair."""
    k1a = np.array([r.kappa1 for r in first])[:, None]
    k2a = np.array([r.kappa2 for r in first])[:, None]
    k1b = np.array([r.kappa1 for r in second])[None, :]
    k2b = np.array([r.kappa2 for r in second])[None, :]
    return np.maximum(_log_ratio(k1a, k1b), _log_ratio(k2a, k2b))


def _directed(first, second, window):
    inside = [r for r in first if abs(r.nu) <= window]
    if not inside:
        return 0.0
    if len(inside) > len(second):
        return np.inf
    costs = _pair_costs(inside, second)
    rows, cols = linear_sum_assignment(costs)
    return float(costs[rows, cols].max())


def sample_distances(a, b, window=None):
    """Per-sample matched distances as (sample, distance) tuples."""
    window = settings.CLOUD_WINDOW if window is None else window
    require_same_lattice(a.lattice, b.lattice)
    if len(a.contour) != len(b.contour) or not np.allclose(a.contour, b.contour, rtol=1e-12, atol=1e-12):
        raise InvalidInputError("clouds were sampled on different contours")
    skipped = a.skipped_samples | b.skipped_samples
    distances = []
    for sample in range(len(a.contour)):
        if sample in skipped:
            continue
        first, second = a.at(sample), b.at(sample)
        distance = max(_directed(first, second, window), _directed(second, first, window))
        distances.append((sample, distance))
    return distances


def cloud_distance(a, b, window=None):
    """
    Largest per-sample distance between two clouds on a shared contour.

    Records with |nu| <= window are matched one-to-one into the other cloud in
    both directions; a window that cannot be matched gives an infinite distance.
    """
    worst = 0.0
    for sample, distance in sample_distances(a, b, window):
        if not np.isfinite(distance):
            logger.warning(
                "Cloud cardinality mismatch",
                sample=sample,
                mu=str(a.contour[sample]),
                records_a=len(a.at(sample)),
                records_b=len(b.at(sample)),
            )
            return np.inf
        worst = max(worst, distance)
    return worst


def gauge_cloud(cloud, b):
    """
    Undo the multiplier action of a gauge transformation with parameter b.

    mu -> mu - b and kappa_j -> kappa_j exp(-b gamma_j); nu is unchanged.
    """
    b = complex(b)
    factors = [np.exp(-b * g) for g in cloud.lattice.periods]
    records = tuple(
        MultiplierRecord(
            r.sample, r.mu - b, r.nu, r.kappa1 * factors[0], r.kappa2 * factors[1], r.residual,
        )
        for r in cloud.records
    )
    contour = tuple(mu - b for mu in cloud.contour)
    return MultiplierCloud(cloud.lattice, contour, records, cloud.skipped)


def record_from_row(sample, mu, kappa1, kappa2, residual, lattice):
    """Rebuild a record from a cloud CSV row, recovering nu."""
    nu = nu_from_multipliers(mu, kappa1, kappa2, lattice)
    return MultiplierRecord(sample, complex(mu), nu, complex(kappa1), complex(kappa2), float(residual))


def exact_free_cloud(lattice, contour, cutoff):
    """Cloud of U = 0: nu = -dbar_{mn} over the mode box at every sample."""
    _, dbar = lattice.symbols(cutoff)
    records = []
    for sample, mu in enumerate(contour):
        for nu in sorted(-dbar.ravel(), key=lambda v: (round(abs(v), 12), round(float(np.angle(v)), 12))):
            kappa1, kappa2 = multipliers_of(ExponentPair(mu, nu), lattice)
            records.append(MultiplierRecord(sample, complex(mu), complex(nu), kappa1, kappa2, 0.0))
    return MultiplierCloud(lattice, tuple(complex(mu) for mu in contour), tuple(records))

"""
Invariance report for a conformal-flow trajectory.
"""
import time

import structlog

from conformal.flow import coordinate_crosscheck
from core.errors import InvalidInputError
from dirac2d.cloud import cloud_distance, multiplier_cloud
from dirac2d.spectrum import kernel_dimension
from weierstrass.surface import willmore

logger = structlog.get_logger(__name__)

REPORT_KEYS = ('cloud_drift', 'willmore_drift', 'max_residual', 'coord_crosscheck', 'kernel_trace')


def _checkpoints(trajectory, count):
    last = len(trajectory) - 1
    if last == 0:
        return [0]
    count = max(2, min(count, last + 1))
    return sorted({round(i * last / (count - 1)) for i in range(count)})


def invariance_report(trajectory, contour, cutoff=None, multipliers=(-1, -1),
                      checkpoints=5, grid=32, threads=None):
    """
    Drift of the multiplier cloud and of the Willmore energy between the first
    and the last state, the worst Dirac residual, the coordinate cross-check
    and kernel dimensions at ``multipliers`` along the trajectory.
    """
    if not trajectory:
        raise InvalidInputError("trajectory is empty")
    start = time.time()
    first, last = trajectory[0], trajectory[-1]
    cutoff = cutoff or first.cutoff
    steps = len(trajectory) - 1

    if steps == 0:
        cloud_drift = 0.0
    else:
        cloud_drift = cloud_distance(
            multiplier_cloud(first.potential, contour, cutoff=cutoff, threads=threads),
            multiplier_cloud(last.potential, contour, cutoff=cutoff, threads=threads),
        )
    w0 = willmore(first.potential)
    willmore_drift = abs(willmore(last.potential) - w0) / max(abs(w0), 1e-300)
    kernel_trace = [
        {
            'tau': trajectory[i].tau,
            'count': kernel_dimension(trajectory[i].potential, multipliers, cutoff=cutoff),
        }
        for i in _checkpoints(trajectory, checkpoints)
    ]
    report = {
        'cloud_drift': float(cloud_drift),
        'willmore_drift': float(willmore_drift),
        'max_residual': float(max(s.max_residual() for s in trajectory)),
        'coord_crosscheck': coordinate_crosscheck(first, last, steps, grid),
        'kernel_trace': kernel_trace,
    }
    logger.info(
        "Invariance report",
        steps=steps,
        cloud_drift=report['cloud_drift'],
        willmore_drift=report['willmore_drift'],
        coord_crosscheck=report['coord_crosscheck'],
        duration_ms=round((time.time() - start) * 1000, 2),
    )
    return report

"""
Bit-stable dataset export: fixed column orders, sorted JSON keys, floats with
17 significant digits and LF line endings.
"""
import json
from pathlib import Path

import numpy as np
import structlog

from core.errors import InvalidInputError
from core.fields import PeriodicField
from core.io import format_row, write_field, write_lines
from core.lattice import Lattice
from dirac2d.cloud import MultiplierCloud, record_from_row
from dirac2d.spectrum import SliceSpectrum
from weierstrass.mesh import write_obj
from weierstrass.surface import ImmersedTorus

logger = structlog.get_logger(__name__)

CLOUD_HEADER = 'mu_re,mu_im,kappa1_re,kappa1_im,kappa2_re,kappa2_im,residual'
SLICE_HEADER = 'nu_re,nu_im,kappa1_re,kappa1_im,kappa2_re,kappa2_im,residual,m,n'
DISTANCE_HEADER = 'sample,mu_re,mu_im,distance'


def cloud_lines(cloud):
    yield CLOUD_HEADER
    for r in cloud.sorted_records():
        yield format_row([
            r.mu.real, r.mu.imag, r.kappa1.real, r.kappa1.imag,
            r.kappa2.real, r.kappa2.imag, r.residual,
        ])


def slice_lines(spectrum):
    yield SLICE_HEADER
    for i, pair in enumerate(spectrum.pairs):
        kappa1, kappa2 = spectrum.multipliers(i)
        yield format_row([
            pair.nu.real, pair.nu.imag, kappa1.real, kappa1.imag, kappa2.real, kappa2.imag,
            pair.residual,
        ]) + f',{pair.mode[0]},{pair.mode[1]}'


def distance_lines(contour, distances):
    yield DISTANCE_HEADER
    for sample, distance in distances:
        mu = contour[sample]
        yield f'{sample},' + format_row([mu.real, mu.imag, distance])


def read_cloud(path, contour, lattice=None):
    """
    Cloud from its CSV; each row is assigned to the nearest contour sample.
    """
    lattice = lattice or Lattice.square()
    contour = tuple(complex(mu) for mu in contour)
    try:
        lines = Path(path).read_text(encoding='utf-8').splitlines()
    except OSError as e:
        raise InvalidInputError(f"cannot read {path}: {e}") from e
    if not lines or lines[0].strip() != CLOUD_HEADER:
        raise InvalidInputError(f"{path}: not a cloud CSV")
    records = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            values = [float(v) for v in line.split(',')]
            mu, kappa1, kappa2 = (complex(values[i], values[i + 1]) for i in (0, 2, 4))
            residual = values[6]
        except (ValueError, IndexError) as e:
            raise InvalidInputError(f"{path}:{number}: malformed row {line!r}") from e
        sample = int(np.argmin([abs(mu - c) for c in contour]))
        if abs(mu - contour[sample]) > 1e-9 * (1 + abs(mu)):
            raise InvalidInputError(f"{path}:{number}: mu={mu} is not on the contour")
        records.append(record_from_row(sample, mu, kappa1, kappa2, residual, lattice))
    return MultiplierCloud(lattice, contour, tuple(records))


def _plain(value):
    """JSON-ready copy: complex as [re, im], numpy scalars and arrays as lists."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def json_text(data):
    return json.dumps(_plain(data), sort_keys=True, indent=2)


def write_json(data, path):
    write_lines(path, json_text(data).split('\n'))


def _kind(result):
    if isinstance(result, MultiplierCloud):
        return 'cloud'
    if isinstance(result, SliceSpectrum):
        return 'slice'
    if isinstance(result, ImmersedTorus):
        return 'surface'
    if isinstance(result, PeriodicField):
        return 'field'
    if isinstance(result, dict):
        return 'report'
    raise InvalidInputError(f"no export for results of type {type(result).__name__}")


EXPORTERS = {
    ('cloud', 'csv'): lambda result, path, **_: write_lines(path, cloud_lines(result)),
    ('cloud', 'json'): lambda result, path, **_: write_json(
        {'records': [[r.sample, r.mu, r.nu, r.kappa1, r.kappa2, r.residual]
                     for r in result.sorted_records()],
         'skipped': [list(s) for s in result.skipped]}, path),
    ('slice', 'csv'): lambda result, path, **_: write_lines(path, slice_lines(result)),
    ('surface', 'obj'): lambda result, path, grid=32, stereographic=False, **_: write_obj(
        result, path, size=grid, stereographic=stereographic),
    ('field', 'csv'): lambda result, path, **_: write_field(result, path),
    ('report', 'json'): lambda result, path, **_: write_json(result, path),
}


def export_dataset(result, path, format, **options):
    """Write ``result`` to ``path``; unsupported (kind, format) pairs are invalid input."""
    kind = _kind(result)
    exporter = EXPORTERS.get((kind, format))
    if exporter is None:
        raise InvalidInputError(f"cannot export {kind} as {format}")
    try:
        exporter(result, path, **options)
    except OSError as e:
        raise InvalidInputError(f"cannot write {path}: {e}") from e
    logger.info("Dataset exported", kind=kind, format=format, path=str(path))

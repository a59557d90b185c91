"""
Text formats for periodic fields and quasi-periodic spinor components.

Field CSV:
    #lattice,<g1re>,<g1im>,<g2re>,<g2im>
    #cutoff,<N>
    m,n,re,im        (one line per stored mode, sorted by (m, n))

Quasi-periodic components add ``#exponents,<mu_re>,<mu_im>,<nu_re>,<nu_im>``
after the cutoff line.
"""
from pathlib import Path

import numpy as np
import structlog

from core.errors import InvalidInputError
from core.fields import PeriodicField
from core.lattice import Lattice, mode_grid
from core.quasi import ExponentPair, QuasiPeriodicFunction

logger = structlog.get_logger(__name__)


def format_float(value):
    return format(float(value), '.17g')


def format_row(values):
    return ','.join(v if isinstance(v, str) else format_float(v) for v in values)


def write_lines(path, lines):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        for line in lines:
            handle.write(line + '\n')


def _field_lines(field, exponents=None):
    lattice = field.lattice
    yield '#lattice,' + format_row([
        lattice.gamma1.real, lattice.gamma1.imag, lattice.gamma2.real, lattice.gamma2.imag,
    ])
    yield f'#cutoff,{field.cutoff}'
    if exponents is not None:
        yield '#exponents,' + format_row([
            exponents.mu.real, exponents.mu.imag, exponents.nu.real, exponents.nu.imag,
        ])
    m, n = mode_grid(field.cutoff)
    for mm, nn, c in zip(m.ravel(), n.ravel(), field.coeffs.ravel()):
        yield f'{mm},{nn},' + format_row([c.real, c.imag])


def write_field(field, path):
    write_lines(path, _field_lines(field))
    logger.debug("Field written", path=str(path), cutoff=field.cutoff)


def write_component(psi, index, path):
    write_lines(path, _field_lines(psi.components[index], psi.exponents))


def _parse(path):
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise InvalidInputError(f"cannot read {path}: {e}") from e
    header = {}
    rows = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(',')
        try:
            if line.startswith('#'):
                header[parts[0][1:]] = [float(p) for p in parts[1:]]
            else:
                rows.append((int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])))
        except (ValueError, IndexError) as e:
            raise InvalidInputError(f"{path}:{number}: malformed line {line!r}") from e
    if 'lattice' not in header or 'cutoff' not in header:
        raise InvalidInputError(f"{path}: missing #lattice or #cutoff header")
    g = header['lattice']
    lattice = Lattice(complex(g[0], g[1]), complex(g[2], g[3]))
    cutoff = int(header['cutoff'][0])
    if cutoff < 1:
        raise InvalidInputError(f"{path}: cutoff must be at least 1")
    coeffs = np.zeros((2 * cutoff + 1, 2 * cutoff + 1), dtype=complex)
    for m, n, re, im in rows:
        if max(abs(m), abs(n)) > cutoff:
            raise InvalidInputError(f"{path}: mode ({m}, {n}) outside cutoff {cutoff}")
        coeffs[m + cutoff, n + cutoff] = complex(re, im)
    return header, PeriodicField(lattice, coeffs)


def read_field(path):
    _, field = _parse(path)
    return field


def read_quasi(paths):
    """Read the components of one quasi-periodic function from its CSV files."""
    exponents = None
    fields = []
    for path in paths:
        header, field = _parse(path)
        if 'exponents' not in header:
            raise InvalidInputError(f"{path}: missing #exponents header")
        e = header['exponents']
        current = ExponentPair(complex(e[0], e[1]), complex(e[2], e[3]))
        if exponents is not None and current != exponents:
            raise InvalidInputError("components carry different exponents")
        exponents = current
        fields.append(field)
    return QuasiPeriodicFunction(exponents, tuple(fields))

"""
Batch command-line front end.

    manage.py <command> [flags]

Commands: fixture, slice, cloud, cloud-dist, kernel-dim, darboux, flow,
willmore, surface, hill, nls. Exit status 0 on success, 2 for invalid input,
3 for numerical failures and 4 when a --verify check fails.
"""
import argparse
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import structlog

from cli import middleware
from cli.export import distance_lines, export_dataset, read_cloud
from config import settings
from conformal.flow import FLOW_CUTOFF, flow, initial_state
from conformal.report import invariance_report
from core import metrics
from core.errors import FloquetError, InvalidInputError, InvariantViolation, NumericalError
from core.fields import PeriodicField
from core.io import read_field, read_quasi, write_component, write_field, write_lines
from core.lattice import Lattice
from darboux.kernels import isospectral_defect, omega, potential_variation
from darboux.pair import conformal_pairs
from dirac2d.cloud import cloud_distance, multiplier_cloud, sample_distances
from dirac2d.operator import DiracPotential, dirac_residual
from dirac2d.spectrum import floquet_function, kernel_singular_values, slice_spectrum
from fixtures.clifford import R3_CUTOFF, clifford_r3, clifford_s3, manifest, r3_potential_values
from spectral1d.monodromy import PeriodicPotential, nls_monodromy
from spectral1d.reduction import reduction_crosscheck
from spectral1d.resonance import discriminant_scan, resonant_points, write_scan
from weierstrass.surface import coordinate_derivatives, integrate_surface, willmore

logger = structlog.get_logger(__name__)

FIXTURES = ('clifford-s3', 'clifford-r3')
DEFAULT_MU = '0.31+0.17i'
BOOLEANS = {'true': True, 'false': False}


# argument grammar

def parse_complex(text):
    """'a+bi', 'i', '-2.5e-3-1i' or 're,im'."""
    text = str(text).strip().replace(' ', '')
    try:
        if ',' in text:
            re_part, im_part = text.split(',')
            return complex(float(re_part), float(im_part))
        literal = re.sub(r'(^|[+-])i', r'\g<1>1i', text).replace('i', 'j')
        return complex(literal)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from e


def parse_contour(text):
    """'start:end:count' -> count samples start + (end - start) t, t in [0, 1)."""
    parts = str(text).split(':')
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"contour must be start:end:count, got {text!r}")
    start, end = parse_complex(parts[0]), parse_complex(parts[1])
    try:
        count = int(parts[2])
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"contour count must be an integer, got {parts[2]!r}") from e
    if count < 1:
        raise argparse.ArgumentTypeError("contour count must be at least 1")
    return tuple(start + (end - start) * k / count for k in range(count))


def parse_mode(text):
    """'j:c' -> (j, c) for one Fourier coefficient."""
    index, _, value = str(text).partition(':')
    try:
        return int(index), parse_complex(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"mode must be j:coefficient, got {text!r}") from e


def parse_interval(text):
    low, _, high = str(text).partition(':')
    try:
        return float(low), float(high)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"interval must be low:high, got {text!r}") from e


def load_config(path):
    """key=value lines with '#' comments, keys normalized to flag destinations."""
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise InvalidInputError(f"cannot read config {path}: {e}") from e
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        if not sep or not key.strip():
            raise InvalidInputError(f"{path}:{number}: expected key=value, got {line!r}")
        value = value.strip()
        values[key.strip().lstrip('-').replace('-', '_')] = BOOLEANS.get(value.lower(), value)
    return values


@dataclass(frozen=True)
class RunConfig:
    command: str
    cutoff: int
    grid: int
    threads: int
    out: Optional[Path] = None
    report: Optional[Path] = None
    contour: Optional[Tuple[complex, ...]] = None
    dtau: Optional[float] = None
    steps: Optional[int] = None

    def validate(self):
        if self.cutoff < 1:
            raise InvalidInputError(f"--cutoff must be at least 1, got {self.cutoff}")
        if self.grid < 3:
            raise InvalidInputError(f"--grid must be at least 3, got {self.grid}")
        if self.threads < 1:
            raise InvalidInputError(f"--threads must be at least 1, got {self.threads}")
        if self.contour is not None and not self.contour:
            raise InvalidInputError("--contour needs at least one sample")
        if self.dtau is not None and not (np.isfinite(self.dtau) and self.dtau > 0):
            raise InvalidInputError(f"--dtau must be positive, got {self.dtau}")
        if self.steps is not None and self.steps < 0:
            raise InvalidInputError(f"--steps must be nonnegative, got {self.steps}")
        for path in (self.out, self.report):
            if path is not None and not str(path):
                raise InvalidInputError("output paths must be nonempty")
        return self

    @classmethod
    def from_args(cls, args):
        return cls(
            command=args.command,
            cutoff=args.cutoff,
            grid=args.grid,
            threads=args.threads,
            out=args.out,
            report=args.report,
            contour=getattr(args, 'contour', None),
            dtau=getattr(args, 'dtau', None),
            steps=getattr(args, 'steps', None),
        ).validate()


# inputs

def _potential(args, cutoff=None):
    fixture = getattr(args, 'fixture', None)
    if fixture == 'clifford-s3':
        return clifford_s3().potential
    if fixture == 'clifford-r3':
        return clifford_r3(cutoff or args.cutoff).potential
    if getattr(args, 'potential', None):
        field = read_field(args.potential)
        return DiracPotential(field, real_reduction=getattr(args, 'real', False))
    raise InvalidInputError("need --fixture or --potential")


def _spinors(args):
    if getattr(args, 'psi', None) and getattr(args, 'phi', None):
        return _read_spinors(args)
    if getattr(args, 'fixture', None) == 'clifford-s3':
        data = clifford_s3()
        return data.potential, data.Psi, data.Phi
    raise InvalidInputError("spinor data need --fixture clifford-s3 or --psi/--phi files")


def _read_spinors(args):
    potential = _potential(args)
    return potential, read_quasi(args.psi), read_quasi(args.phi)


def _verify(args, checks):
    """Raise InvariantViolation for the first failing (name, ok, value) check."""
    if not getattr(args, 'verify', False):
        return
    for name, ok, value in checks:
        if not ok:
            raise InvariantViolation(f"{name} check failed: {value}")


def _output(args, result, fmt, **options):
    if args.out is not None:
        export_dataset(result, args.out, fmt, **options)


def _report(args, data):
    if args.report is not None:
        export_dataset(data, args.report, 'json')


# commands

def cmd_fixture(args):
    out = Path(args.out or '.')
    r3_cutoff = args.cutoff if args.cutoff_given else R3_CUTOFF
    s3 = clifford_s3()
    if args.name == 'clifford-s3':
        data = s3
        write_field(data.potential.field, out / 'potential.csv')
        for name, psi in (('psi', data.Psi), ('phi', data.Phi)):
            for index in (0, 1):
                write_component(psi, index, out / f'{name}{index + 1}.csv')
        residuals = (
            dirac_residual(data.potential, data.Psi),
            dirac_residual(data.potential, data.Phi, adjoint=True),
        )
        _verify(args, [('fixture residual', max(residuals) < 1e-12, residuals)])
        detail = f"residual={max(residuals):.3e}"
    else:
        data = clifford_r3(r3_cutoff)
        write_field(data.potential.field, out / 'potential.csv')
        detail = f"cutoff={data.potential.cutoff}"
    r3 = data if args.name == 'clifford-r3' else clifford_r3(r3_cutoff)
    export_dataset(manifest(s3, r3), out / 'manifest.json', 'json')
    return f"fixture {args.name} written to {out} {detail}"


def cmd_slice(args):
    potential = _potential(args)
    spectrum = slice_spectrum(potential, args.mu, adjoint=args.adjoint, cutoff=args.cutoff)
    _output(args, spectrum, 'csv')
    worst = float(np.max(spectrum.residuals)) if len(spectrum) else 0.0
    _verify(args, [('slice residual', worst < settings.SLICE_RESIDUAL_TOL, worst)])
    return f"slice mu={args.mu} eigenvalues={len(spectrum)} max_residual={worst:.3e}"


def cmd_cloud(args):
    potential = _potential(args)
    cloud = multiplier_cloud(
        potential, args.contour, cutoff=args.cutoff, adjoint=args.adjoint, threads=args.threads,
    )
    _output(args, cloud, 'csv')
    return f"cloud samples={len(cloud.contour)} records={len(cloud)} skipped={len(cloud.skipped)}"


def _cloud_source(source, args):
    if source in FIXTURES:
        potential = clifford_s3().potential if source == 'clifford-s3' else clifford_r3(args.cutoff).potential
        return multiplier_cloud(potential, args.contour, cutoff=args.cutoff, threads=args.threads)
    return read_cloud(source, args.contour)


def cmd_cloud_dist(args):
    first, second = (_cloud_source(s, args) for s in (args.left, args.right))
    distance = cloud_distance(first, second, window=args.window)
    if args.out is not None:
        write_lines(args.out, distance_lines(first.contour, sample_distances(first, second, args.window)))
    _verify(args, [('cloud distance', distance < args.tolerance, distance)])
    return f"cloud-dist distance={distance:.6e}"


def cmd_kernel_dim(args):
    potential = _potential(args)
    values = kernel_singular_values(
        potential, (args.kappa1, args.kappa2), k=args.k, adjoint=args.adjoint, cutoff=args.cutoff,
    )
    count = int(np.sum(values < args.threshold))
    _report(args, {
        'multipliers': [args.kappa1, args.kappa2],
        'threshold': args.threshold,
        'count': count,
        'singular_values': values,
    })
    if args.expect is not None:
        _verify(args, [('kernel dimension', count == args.expect, count)])
    return f"kernel-dim count={count} threshold={args.threshold:.1e}"


def _kernel_defect(potential, pairs, mu, cutoff):
    """Worst consistency defect of omega over both pairs for the slice eigenpair nearest nu = 0."""
    nus = slice_spectrum(potential, mu, cutoff=cutoff).nus
    psi = floquet_function(potential, mu, int(np.argmin(np.abs(nus))), cutoff=cutoff)
    return max(omega(psi, pair).defect for pair in pairs)


def cmd_darboux(args):
    potential, Psi, Phi = _spinors(args)
    pairs = conformal_pairs(potential, Psi, Phi)
    first, second = (-potential_variation(pair)[1] for pair in pairs)
    delta_u = first + second
    lattice = potential.lattice
    control = (PeriodicField.mode(lattice, 1, 0, amplitude=0.5)
               + PeriodicField.mode(lattice, -1, 0, amplitude=0.5) + 1.0)
    eps = args.eps
    rows = {}
    for name, variation in (('darboux', delta_u), ('control', control)):
        full = isospectral_defect(potential, variation, args.mu, eps, cutoff=args.cutoff)
        half = isospectral_defect(potential, variation, args.mu, eps / 2, cutoff=args.cutoff)
        rows[name] = {'defect': full, 'defect_half': half, 'ratio': full / half if half else float('inf')}
    kernel_defect = _kernel_defect(potential, pairs, args.mu, args.cutoff)
    _report(args, {
        'mu': args.mu, 'eps': eps, 'cutoff': args.cutoff, 'kernel_defect': kernel_defect, **rows,
    })
    _verify(args, [
        ('kernel defect', kernel_defect < 1e-10, kernel_defect),
        ('darboux ratio', 3.5 <= rows['darboux']['ratio'] <= 4.5, rows['darboux']['ratio']),
        ('control ratio', 1.7 <= rows['control']['ratio'] <= 2.3, rows['control']['ratio']),
    ])
    return (
        f"darboux ratio={rows['darboux']['ratio']:.4f} "
        f"control_ratio={rows['control']['ratio']:.4f} kernel_defect={kernel_defect:.3e}"
    )


def cmd_flow(args):
    potential, Psi, Phi = _spinors(args)
    trajectory = flow(initial_state(potential, Psi, Phi, cutoff=args.cutoff), args.dtau, args.steps)
    report = invariance_report(
        trajectory, args.contour, cutoff=args.cutoff, grid=args.grid, threads=args.threads,
    )
    report['potential_change'] = (trajectory[-1].potential.field - trajectory[0].potential.field).norm()
    _report(args, report)
    _verify(args, [
        ('cloud drift', report['cloud_drift'] < 1e-6, report['cloud_drift']),
        ('willmore drift', report['willmore_drift'] < 1e-8, report['willmore_drift']),
        ('coordinate cross-check', report['coord_crosscheck'] < 1e-6, report['coord_crosscheck']),
    ])
    return (
        f"flow steps={args.steps} cloud_drift={report['cloud_drift']:.3e} "
        f"willmore_drift={report['willmore_drift']:.3e} coord_crosscheck={report['coord_crosscheck']:.3e}"
    )


def cmd_willmore(args):
    value = willmore(_potential(args))
    _report(args, {'willmore': value, 'ratio_to_2pi2': value / (2 * np.pi ** 2)})
    return f"willmore value={value:.17g}"


def cmd_surface(args):
    _, Psi, Phi = _spinors(args)
    torus = integrate_surface(coordinate_derivatives(Psi, Phi))
    residual = float(np.max(torus.period_residuals()))
    _verify(args, [('closing', torus.is_closed(), residual)])
    _output(args, torus, 'obj', grid=args.grid, stereographic=args.stereographic)
    return f"surface closed={torus.is_closed()} max_period_residual={residual:.3e}"


def _hill_potential(args):
    return PeriodicPotential(dict(args.mode or []), args.period)


def cmd_hill(args):
    u = _hill_potential(args)
    sign = None if args.sign is None else int(args.sign)
    points = resonant_points(u, u.period, window=args.window, sign=sign, threads=args.threads)
    if args.scan is not None:
        low, high = args.window
        energies = np.linspace(low, high, args.scan)
        rows = discriminant_scan(u, u.period, energies, threads=args.threads)
        if args.out is not None:
            write_scan(rows, args.out)
    _report(args, {'potential': repr(u), 'points': [p.as_dict() for p in points]})
    _verify(args, [
        ('trace defect', all(p.trace_defect < settings.TRACE_TOL for p in points),
         [p.trace_defect for p in points]),
    ])
    jordan = sum(p.classification == 'jordan' for p in points)
    return f"hill resonant_points={len(points)} jordan={jordan}"


def cmd_nls(args):
    lattice = Lattice.square()
    if args.fixture == 'clifford-r3':
        profile = PeriodicPotential(r3_potential_values)
        potential = clifford_r3(args.cutoff).potential
    else:
        modes = dict(args.mode or [])
        profile = PeriodicPotential(modes)
        N = max([args.cutoff] + [abs(j) for j in modes])
        coeffs = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
        for j, c in modes.items():
            coeffs[N, j + N] = c
        potential = DiracPotential(PeriodicField(lattice, coeffs))
    monodromy = nls_monodromy(profile, args.k)
    defect = reduction_crosscheck(potential, args.k, cutoff=args.cutoff) if args.verify else None
    _report(args, {
        'k': args.k,
        'multipliers': list(monodromy.multipliers),
        'trace': monodromy.trace,
        'det': monodromy.det,
        'reduction_defect': defect,
    })
    if defect is not None:
        _verify(args, [('reduction cross-check', defect < 1e-6, defect)])
    kappa = ' '.join(f"{k:.10g}" for k in monodromy.multipliers)
    return f"nls k={args.k} multipliers={kappa}"


HANDLERS = {
    'fixture': cmd_fixture,
    'slice': cmd_slice,
    'cloud': cmd_cloud,
    'cloud-dist': cmd_cloud_dist,
    'kernel-dim': cmd_kernel_dim,
    'darboux': cmd_darboux,
    'flow': cmd_flow,
    'willmore': cmd_willmore,
    'surface': cmd_surface,
    'hill': cmd_hill,
    'nls': cmd_nls,
}


# parser

def _common(cutoff=settings.DEFAULT_CUTOFF, grid=settings.DEFAULT_GRID):
    """Shared flags. Build one per subparser: argparse parents share Action objects."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--cutoff', type=int, default=cutoff, help='Fourier cutoff N')
    common.add_argument('--grid', type=int, default=grid, help='evaluation grid size')
    common.add_argument('--threads', type=int, default=settings.THREADS, help='worker cap')
    common.add_argument('--config', type=Path, default=None, help='key=value defaults file')
    common.add_argument('--metrics-out', type=Path, default=None, help='Prometheus text file')
    common.add_argument('--verify', action='store_true', help='exit 4 when a check fails')
    common.add_argument('--out', type=Path, default=None, help='dataset output path')
    common.add_argument('--report', type=Path, default=None, help='JSON report path')
    return common


def _source(parser):
    parser.add_argument('--fixture', choices=FIXTURES, default=None)
    parser.add_argument('--potential', type=Path, default=None, help='potential CSV')
    parser.add_argument('--real', action='store_true', help='potential is real-valued')


def _spinor_source(parser):
    _source(parser)
    parser.add_argument('--psi', type=Path, nargs=2, default=None, help='Psi component CSVs')
    parser.add_argument('--phi', type=Path, nargs=2, default=None, help='Phi component CSVs')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='manage.py', description='Floquet multiplier sets of doubly periodic Dirac operators.',
    )
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('fixture', parents=[_common()], help='write Clifford fixture data')
    p.add_argument('name', choices=FIXTURES)

    p = commands.add_parser('slice', parents=[_common()], help='multipliers of one mu-slice')
    _source(p)
    p.add_argument('--mu', type=parse_complex, required=True)
    p.add_argument('--adjoint', action='store_true')

    p = commands.add_parser('cloud', parents=[_common()], help='multiplier cloud along a contour')
    _source(p)
    p.add_argument('--contour', type=parse_contour, required=True)
    p.add_argument('--adjoint', action='store_true')

    p = commands.add_parser('cloud-dist', parents=[_common()], help='matched distance of two clouds')
    p.add_argument('left', help='fixture name or cloud CSV')
    p.add_argument('right', help='fixture name or cloud CSV')
    p.add_argument('--contour', type=parse_contour, required=True)
    p.add_argument('--window', type=float, default=settings.CLOUD_WINDOW)
    p.add_argument('--tolerance', type=float, default=1e-6)

    p = commands.add_parser('kernel-dim', parents=[_common()], help='kernel at fixed multipliers')
    _source(p)
    p.add_argument('--kappa1', type=parse_complex, default=-1)
    p.add_argument('--kappa2', type=parse_complex, default=-1)
    p.add_argument('--k', type=int, default=8)
    p.add_argument('--threshold', type=float, default=1e-8)
    p.add_argument('--adjoint', action='store_true')
    p.add_argument('--expect', type=int, default=None)

    p = commands.add_parser('darboux', parents=[_common(cutoff=12)], help='first-order isospectrality')
    _spinor_source(p)
    p.add_argument('--mu', type=parse_complex, default=parse_complex(DEFAULT_MU))
    p.add_argument('--eps', type=float, default=1e-3)

    p = commands.add_parser(
        'flow', parents=[_common(cutoff=FLOW_CUTOFF, grid=32)], help='conformal flow and invariance report',
    )
    _spinor_source(p)
    p.add_argument('--dtau', type=float, default=1e-3)
    p.add_argument('--steps', type=int, default=50)
    p.add_argument('--contour', type=parse_contour, default=parse_contour('0:i:32'))

    p = commands.add_parser('willmore', parents=[_common()], help='Willmore energy of a potential')
    _source(p)

    p = commands.add_parser('surface', parents=[_common(grid=32)], help='immersed torus mesh')
    _spinor_source(p)
    p.add_argument('--stereographic', action='store_true')

    p = commands.add_parser('hill', parents=[_common()], help='Hill discriminant and resonant points')
    p.add_argument('--mode', type=parse_mode, action='append', default=None,
                   help='Fourier coefficient j:c of u, repeatable')
    p.add_argument('--period', type=float, default=2 * np.pi)
    p.add_argument('--window', type=parse_interval, default=(0.1, 4.1))
    p.add_argument('--sign', type=int, choices=(1, -1), default=None)
    p.add_argument('--scan', type=int, default=None, help='discriminant scan sample count')

    p = commands.add_parser('nls', parents=[_common()], help='NLS auxiliary monodromy')
    p.add_argument('--fixture', choices=('clifford-r3',), default=None)
    p.add_argument('--mode', type=parse_mode, action='append', default=None,
                   help='Fourier coefficient j:c of U(y), repeatable')
    p.add_argument('--k', type=parse_complex, required=True)

    parser.commands = commands
    return parser


def parse(argv):
    """Parse argv; values from --config become defaults that flags override."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument('--config', type=Path, default=None)
    known, _ = pre.parse_known_args(argv)
    parser = build_parser()
    if known.config is not None:
        defaults = load_config(known.config)
        for subparser in parser.commands.choices.values():
            subparser.set_defaults(**defaults)
    args = parser.parse_args(argv)
    args.cutoff_given = any(a == '--cutoff' or a.startswith('--cutoff=') for a in argv)
    return args


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
        config = RunConfig.from_args(args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    except FloquetError as e:
        print(f"ERROR {e.code}: {e.detail}", file=sys.stderr)
        return e.exit_code

    context = middleware.CommandContext(config.command, argv)
    middleware.process_command(context)
    try:
        try:
            summary = HANDLERS[config.command](args)
        except (ArithmeticError, np.linalg.LinAlgError) as e:
            raise NumericalError(f"{type(e).__name__}: {e}") from e
    except FloquetError as e:
        middleware.process_exception(context, e)
        print(f"ERROR {e.code}: {e.detail}", file=sys.stderr)
        return e.exit_code
    else:
        middleware.process_result(context)
        print(summary)
        return 0
    finally:
        if getattr(args, 'metrics_out', None) is not None:
            metrics.write_metrics(args.metrics_out)

"""
Tests for the command-line front end.
"""
import argparse
import json
import unittest

import numpy as np
import pytest

from cli.commands import (
    RunConfig, build_parser, load_config, parse, parse_complex, parse_contour, parse_mode, run,
)
from config import settings
from core.errors import InvalidInputError

S3_SLICE = ['slice', '--fixture', 'clifford-s3', '--mu', '0.3+0.2i', '--cutoff', '4']


class TestArgumentGrammar(unittest.TestCase):

    def test_complex_literals(self):
        self.assertEqual(parse_complex('0.31+0.17i'), 0.31 + 0.17j)
        self.assertEqual(parse_complex('i'), 1j)
        self.assertEqual(parse_complex('-i'), -1j)
        self.assertEqual(parse_complex('-2.5e-3-1i'), -2.5e-3 - 1j)
        self.assertEqual(parse_complex('0.5, -2'), 0.5 - 2j)
        self.assertEqual(parse_complex('3'), 3 + 0j)

    def test_bad_complex(self):
        with self.assertRaises(argparse.ArgumentTypeError):
            parse_complex('one')

    def test_contour(self):
        self.assertEqual(parse_contour('0:i:4'), (0j, 0.25j, 0.5j, 0.75j))
        self.assertEqual(len(parse_contour('0.1:0.1+i:32')), 32)
        for text in ('0:i', '0:i:0', '0:i:x'):
            with self.assertRaises(argparse.ArgumentTypeError):
                parse_contour(text)

    def test_mode(self):
        self.assertEqual(parse_mode('1:0.5'), (1, 0.5 + 0j))
        self.assertEqual(parse_mode('-2:i'), (-2, 1j))


class TestConfig(unittest.TestCase):

    def test_run_config_validation(self):
        args = parse(S3_SLICE)
        self.assertEqual(RunConfig.from_args(args).cutoff, 4)
        with self.assertRaises(InvalidInputError):
            RunConfig('slice', cutoff=4, grid=2, threads=1).validate()
        with self.assertRaises(InvalidInputError):
            RunConfig('flow', cutoff=4, grid=8, threads=1, dtau=0.0).validate()

    def test_per_command_defaults(self):
        self.assertEqual(parse(['darboux', '--fixture', 'clifford-s3']).cutoff, 12)
        args = parse(['flow', '--fixture', 'clifford-s3'])
        self.assertEqual((args.cutoff, args.grid, args.steps), (8, 32, 50))
        self.assertEqual(len(args.contour), 32)
        self.assertFalse(args.cutoff_given)
        for command in (['slice', '--fixture', 'clifford-s3', '--mu', '0.3'],
                        ['cloud', '--fixture', 'clifford-s3', '--contour', '0:i:4'],
                        ['kernel-dim', '--fixture', 'clifford-s3']):
            args = parse(command)
            self.assertEqual((args.cutoff, args.grid), (settings.DEFAULT_CUTOFF, settings.DEFAULT_GRID), command[0])
        self.assertEqual(parse(['surface', '--fixture', 'clifford-s3']).cutoff, settings.DEFAULT_CUTOFF)
        self.assertEqual(parse(['darboux', '--fixture', 'clifford-s3']).grid, settings.DEFAULT_GRID)

    def test_config_file(self):
        import tempfile
        from pathlib import Path
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'run.cfg'
            path.write_text('# defaults\ncutoff = 3\nverify = true\n')
            self.assertEqual(load_config(path), {'cutoff': '3', 'verify': True})
            args = parse(S3_SLICE[:-2] + ['--config', str(path)])
            self.assertEqual(args.cutoff, 3)
            self.assertTrue(args.verify)
            args = parse(S3_SLICE + ['--config', str(path)])
            self.assertEqual(args.cutoff, 4)

    def test_malformed_config(self):
        import tempfile
        from pathlib import Path
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'bad.cfg'
            path.write_text('cutoff\n')
            with self.assertRaises(InvalidInputError):
                load_config(path)
            with self.assertRaises(InvalidInputError):
                load_config(Path(tmp) / 'missing.cfg')

    def test_parser_lists_every_command(self):
        names = set(build_parser().commands.choices)
        self.assertEqual(names, {
            'fixture', 'slice', 'cloud', 'cloud-dist', 'kernel-dim', 'darboux', 'flow',
            'willmore', 'surface', 'hill', 'nls',
        })


def test_invalid_cutoff_exit_code(capsys):
    assert run(S3_SLICE[:-1] + ['-1']) == 2
    assert capsys.readouterr().err.startswith('ERROR invalid-input:')


def test_unknown_command():
    assert run(['spectrum']) == 2


def test_resonant_slice_exit_code(capsys):
    assert run(['slice', '--fixture', 'clifford-s3', '--mu', '0.5', '--cutoff', '4']) == 3
    assert 'ERROR resonance:' in capsys.readouterr().err


def test_missing_potential_source(capsys):
    assert run(['willmore']) == 2
    assert 'ERROR invalid-input:' in capsys.readouterr().err


def test_fixture_files(tmp_path):
    assert run(['fixture', 'clifford-s3', '--out', str(tmp_path)]) == 0
    for name in ('potential.csv', 'psi1.csv', 'psi2.csv', 'phi1.csv', 'phi2.csv', 'manifest.json'):
        assert (tmp_path / name).exists(), name
    manifest = json.loads((tmp_path / 'manifest.json').read_text())
    assert manifest['r3_cutoff'] == 32


def test_slice_output_is_deterministic(tmp_path):
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    assert run(S3_SLICE + ['--out', str(first)]) == 0
    assert run(S3_SLICE + ['--out', str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert first.read_text().splitlines()[0].startswith('nu_re,nu_im')
    assert b'\r\n' not in first.read_bytes()


def test_cloud_output_is_deterministic(tmp_path):
    argv = ['cloud', '--fixture', 'clifford-s3', '--contour', '0.1+0.1i:0.3+0.5i:3',
            '--cutoff', '4', '--threads', '2']
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    assert run(argv + ['--out', str(first)]) == 0
    assert run(argv + ['--out', str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert len(first.read_text().splitlines()) > 1


def test_r3_manifest_follows_cutoff(tmp_path):
    assert run(['fixture', 'clifford-r3', '--cutoff', '24', '--out', str(tmp_path)]) == 0
    assert json.loads((tmp_path / 'manifest.json').read_text())['r3_cutoff'] == 24


def test_darboux_reports_kernel_defect(tmp_path, capsys):
    report = tmp_path / 'darboux.json'
    assert run(['darboux', '--fixture', 'clifford-s3', '--cutoff', '6', '--report', str(report)]) == 0
    assert json.loads(report.read_text())['kernel_defect'] < 1e-10
    assert 'kernel_defect=' in capsys.readouterr().out


def test_config_matches_flags(tmp_path):
    config = tmp_path / 'run.cfg'
    config.write_text('cutoff=3\n')
    assert run(S3_SLICE[:-2] + ['--config', str(config), '--out', str(tmp_path / 'a.csv')]) == 0
    assert run(S3_SLICE[:-1] + ['3', '--out', str(tmp_path / 'b.csv')]) == 0
    assert (tmp_path / 'a.csv').read_bytes() == (tmp_path / 'b.csv').read_bytes()


def test_willmore_report(tmp_path, capsys):
    report = tmp_path / 'willmore.json'
    assert run(['willmore', '--fixture', 'clifford-s3', '--report', str(report)]) == 0
    data = json.loads(report.read_text())
    assert data['willmore'] == pytest.approx(2 * np.pi ** 2, abs=1e-12)
    assert data['ratio_to_2pi2'] == pytest.approx(1.0)
    assert 'willmore value=' in capsys.readouterr().out


def test_metrics_file(tmp_path):
    path = tmp_path / 'metrics.prom'
    assert run(S3_SLICE + ['--metrics-out', str(path)]) == 0
    text = path.read_text()
    assert 'floquet_slice_solves_total' in text
    assert 'floquet_commands_total' in text


def test_failed_verification_exit_code(tmp_path, capsys):
    argv = ['kernel-dim', '--fixture', 'clifford-s3', '--cutoff', '4', '--verify']
    assert run(argv + ['--expect', '4', '--report', str(tmp_path / 'k.json')]) == 0
    assert json.loads((tmp_path / 'k.json').read_text())['count'] == 4
    assert run(argv + ['--expect', '3']) == 4
    assert 'ERROR invariant-violation:' in capsys.readouterr().err


def test_surface_mesh(tmp_path):
    path = tmp_path / 'torus.obj'
    assert run(['surface', '--fixture', 'clifford-s3', '--grid', '8', '--verify', '--out', str(path)]) == 0
    lines = path.read_text().splitlines()
    assert sum(line.startswith('f ') for line in lines) == 128


def test_nls_free_monodromy(capsys):
    assert run(['nls', '--k', '0.5']) == 0
    assert 'nls k=' in capsys.readouterr().out


def test_export_rejects_unsupported_format(tmp_path):
    from cli.export import export_dataset
    from fixtures.clifford import clifford_s3
    with pytest.raises(InvalidInputError):
        export_dataset(clifford_s3().potential.field, tmp_path / 'u.obj', 'obj')
    with pytest.raises(InvalidInputError):
        export_dataset(object(), tmp_path / 'x.csv', 'csv')


def test_json_export_is_sorted(tmp_path):
    from cli.export import export_dataset
    path = tmp_path / 'report.json'
    export_dataset({'b': 1 + 2j, 'a': np.float64(0.5)}, path, 'json')
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {'a': 0.5, 'b': [1.0, 2.0]}

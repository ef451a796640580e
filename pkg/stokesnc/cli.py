"""
Command-line front end of stokesnc.

Every subcommand reads a configuration (defaults, ``--config`` JSON file,
then flag overrides), runs one pipeline stage and writes its artifacts to
``--out``. Exit codes: 0 success, 1 invalid configuration or input data,
2 numerical failure or failed checks.
"""
import argparse
import os
import sys

import numpy as np
import pandas as pd

from .config import load_config
from .exceptions import NumericalError
from .experiment import (CHECKS, StokesExperiment, control_frame,
                         eigenfunction_frame, spectrum_frame, write_artifacts,
                         write_csv, write_eigenfunctions_h5, write_json)
from .control import time_grid, truncation_sensitivity, uniformity_scan
from .spectral import trace_bound_report
from .utils import check_logger


EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

# flag dest -> configuration key
_OVERRIDES = {'m_max': 'm_max', 'l_max': 'l_max', 'nu': 'nu',
              'length': 'length', 't': 'T', 't0': 'T0', 'seed': 'seed'}


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with ``EXIT_CONFIG``."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, '%s: error: %s\n' % (self.prog, message))


def _common(parser):
    parser.add_argument('--config', default=None, metavar='PATH',
                        help='JSON file with a flat configuration object')
    parser.add_argument('--out', default='.', metavar='DIR',
                        help='output directory (default: current directory)')
    parser.add_argument('--m-max', dest='m_max', type=int, default=None)
    parser.add_argument('--l-max', dest='l_max', type=int, default=None)
    parser.add_argument('--nu', type=float, default=None)
    parser.add_argument('--length', type=float, default=None)
    parser.add_argument('--t', type=float, default=None, help='final time T')
    parser.add_argument('--t0', type=float, default=None,
                        help='control horizon T0')
    parser.add_argument('--seed', type=int, default=None)
    parser.add_argument('-v', '--verbose', action='store_true')


def build_parser():
    parser = _Parser(
        prog='stokesnc',
        description='Spectrum and boundary null control of the Stokes '
                    'system in a periodic channel.')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    helps = {'spectrum': 'certified roots of the characteristic equation',
             'eigen': 'normalized eigenfunctions and pressure traces',
             'observability': 'smallest observability ratios per mode',
             'control': 'synthesize the boundary null control',
             'simulate': 'controlled and uncontrolled modal simulation',
             'verify': 'run the numerical cross-checks'}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _common(p)
        if name in ('control', 'simulate'):
            p.add_argument('--psi-off', dest='psi_off', action='store_true',
                           help='run with the control switched off')
        if name == 'verify':
            p.add_argument('--checks', default=None, metavar='LIST',
                           help='comma-separated subset of: %s'
                                % ','.join(CHECKS))
            p.add_argument('--corrupt-root', dest='corrupt_root',
                           default=None, help=argparse.SUPPRESS)
    return parser


def _config(args):
    overrides = {key: getattr(args, dest)
                 for dest, key in _OVERRIDES.items()}
    if getattr(args, 'psi_off', False):
        overrides['psi_off'] = True
    if args.config is not None and not os.path.exists(args.config):
        raise FileNotFoundError('config file %s not found' % args.config)
    return load_config(args.config, overrides)


def _print_table(rows, columns, stream=None):
    stream = stream or sys.stdout
    df = pd.DataFrame(rows, columns=columns)
    stream.write(df.to_string(index=False) + '\n')


def cmd_spectrum(experiment, out):
    spectrum = experiment.compute_spectrum()
    write_csv(spectrum_frame(spectrum), os.path.join(out, 'spectrum.csv'))
    loc = experiment.check_localization()
    gap = experiment.check_gap()
    _print_table([{'m': m, 'n_roots': len(r), 'mu_1': r[0].mu_tilde,
                   'lambda_1': r[0].lam}
                  for m, r in sorted(spectrum.roots_.items())],
                 ['m', 'n_roots', 'mu_1', 'lambda_1'])
    return EXIT_OK if loc['passed'] and gap['passed'] else EXIT_NUMERICAL


def cmd_eigen(experiment, out):
    eigs = experiment.compute_eigenfunctions()
    write_csv(eigenfunction_frame(eigs),
              os.path.join(out, 'eigenfunctions.csv'))
    write_eigenfunctions_h5(eigs, os.path.join(out, 'eigenfunctions.h5'))
    bound = trace_bound_report(experiment.spectrum_.all_roots(),
                               nu=experiment.channel.nu)
    traces = [{'m': m, 'l': e.l, 'lambda': e.lam, 'xi_ppp_1': e.xi_ppp_1,
               'weight': e.q_1, 'trace_ratio': e.trace_ratio}
              for m in sorted(eigs) for e in eigs[m]]
    write_json({'M': bound['M'], 'ratio_spread': bound['ratio_spread'],
                'nonvanishing': bound['nonvanishing'], 'traces': traces},
               os.path.join(out, 'traces.json'))
    _print_table([{'m': t['m'], 'l': t['l'], 'lambda': t['lambda'],
                   '|xi_ppp_1|': abs(t['xi_ppp_1'])}
                  for t in traces if t['m'] > 0 and t['l'] <= 3],
                 ['m', 'l', 'lambda', '|xi_ppp_1|'])
    return EXIT_OK if bound['nonvanishing'] else EXIT_NUMERICAL


def cmd_observability(experiment, out):
    cfg = experiment.config
    systems = experiment.build_systems()
    T, T0 = experiment.channel.T, experiment.channel.T0
    scan = uniformity_scan(systems, cfg.observability_branches, T, T0)
    rows = [r.as_row() for r in scan['reports']]
    write_csv(pd.DataFrame(rows), os.path.join(out, 'observability.csv'))
    sensitivity = []
    if cfg.truncation.l_max >= cfg.observability_branches + 2:
        sensitivity = [truncation_sensitivity(
            systems[m], cfg.observability_branches, T, T0)
            for m in sorted(systems) if m > 0]
    write_json({'min_ratio': scan['min_ratio'],
                'argmin_m': scan['argmin_m'],
                'all_positive': scan['all_positive'],
                'symmetric': scan['symmetric'],
                'non_degrading': scan['non_degrading'],
                'truncation': sensitivity,
                'truncation_tested': any(r['extended'] for r in sensitivity),
                'dropped': {str(r.m): r.dropped for r in scan['reports']}},
               os.path.join(out, 'observability.json'))
    _print_table(rows, ['m', 'L_effective', 'smallest_ratio', 'condition_Q'])
    return EXIT_OK if scan['all_positive'] else EXIT_NUMERICAL


def _terminal_table(report):
    _print_table(report.modes, ['m', 'initial_norm', 'controlled_norm',
                                'uncontrolled_norm', 'energy'])


def cmd_control(experiment, out, verbose=False):
    cfg = experiment.config
    report = experiment.run(verbose=verbose)
    x = np.arange(cfg.n_x) * experiment.channel.length / cfg.n_x
    t = time_grid(experiment.channel.T, cfg.truncation.time_steps)
    field = experiment.controller_.field(x, t, experiment.channel.length)
    write_csv(control_frame(field), os.path.join(out, 'control.csv'))
    table = experiment.controller_.coefficient_table()
    write_json({'T': experiment.channel.T, 'T0': experiment.channel.T0,
                'energy': experiment.controller_.energy_,
                'max_mean': field.max_mean,
                'vanishes_after_T0': field.vanishes_after_T0,
                'coefficients': table.to_dict(orient='records')},
               os.path.join(out, 'control.json'))
    write_json(report.to_dict(cfg.record_timing),
               os.path.join(out, 'report.json'))
    _terminal_table(report)
    return EXIT_OK


def cmd_simulate(experiment, out, verbose=False):
    report = experiment.run(verbose=verbose)
    write_artifacts(experiment, report, out)
    _terminal_table(report)
    return EXIT_OK


def cmd_verify(experiment, out, checks=None):
    results = experiment.run_checks(checks)
    failed = [name for name, r in results.items() if not r['passed']]
    write_json({'checks': results, 'failed': failed,
                'passed': not failed}, os.path.join(out, 'verify.json'))
    _print_table([{'check': name, 'passed': r['passed']}
                  for name, r in results.items()], ['check', 'passed'])
    if failed:
        sys.stderr.write('failed checks: %s\n' % ', '.join(failed))
        return EXIT_NUMERICAL
    return EXIT_OK


def _parse_pair(text):
    try:
        m, l = (int(v) for v in text.split(','))
    except ValueError:
        raise ValueError('--corrupt-root expects M,L, got %r' % text)
    return m, l


def main(argv=None):
    """Entry point of the ``stokesnc`` console script.

    Returns
    -------
    code : int
        Process exit code.
    """
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # --help exits 0, usage errors exit EXIT_CONFIG
        return e.code
    logger = check_logger(None, 'stokesnc')
    try:
        config = _config(args)
        os.makedirs(args.out, exist_ok=True)
        corrupt = getattr(args, 'corrupt_root', None)
        experiment = StokesExperiment(
            config, corrupt_root=_parse_pair(corrupt) if corrupt else None,
            logger=logger)
        experiment.set_verbosity(args.verbose)
        if args.command == 'spectrum':
            return cmd_spectrum(experiment, args.out)
        if args.command == 'eigen':
            return cmd_eigen(experiment, args.out)
        if args.command == 'observability':
            return cmd_observability(experiment, args.out)
        if args.command == 'control':
            return cmd_control(experiment, args.out, args.verbose)
        if args.command == 'simulate':
            return cmd_simulate(experiment, args.out, args.verbose)
        checks = args.checks.split(',') if args.checks else None
        return cmd_verify(experiment, args.out, checks)
    except (ValueError, OSError) as e:
        sys.stderr.write('error: %s\n' % e)
        return EXIT_CONFIG
    except NumericalError as e:
        sys.stderr.write('numerical failure: %s\n' % e)
        return EXIT_NUMERICAL


if __name__ == '__main__':
    sys.exit(main())

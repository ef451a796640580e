import json
import os

import pytest

import pandas as pd
from numpy.testing import assert_array_equal

from stokesnc.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main


SMALL = ['--m-max', '2', '--l-max', '6', '--nu', '0.1']


def _out(tmpdir, name='out'):
    return str(tmpdir.join(name))


@pytest.mark.fast
def test_spectrum_command(tmpdir):
    """Tests the spectrum subcommand writes every (m, l) root."""
    out = _out(tmpdir)
    code = main(['spectrum', '--m-max', '4', '--l-max', '10', '--out', out])
    assert code == EXIT_OK
    table = pd.read_csv(os.path.join(out, 'spectrum.csv'))
    assert table.shape[0] == 80
    assert list(table.columns[:5]) == ['m', 'k', 'l', 'mu_tilde', 'lambda']


@pytest.mark.fast
def test_config_file_and_overrides(tmpdir):
    """Tests whether flags take precedence over the config file."""
    path = str(tmpdir.join('config.json'))
    with open(path, 'w') as f:
        json.dump({'m_max': 2, 'l_max': 6, 'nu': 0.5}, f)
    out = _out(tmpdir)
    code = main(['spectrum', '--config', path, '--l-max', '4', '--out', out])
    assert code == EXIT_OK
    assert pd.read_csv(os.path.join(out, 'spectrum.csv')).shape[0] == 16


@pytest.mark.fast
def test_invalid_configuration(tmpdir, capsys):
    """Tests exit code 1 for a missing file, a bad value and an unknown
    check."""
    out = _out(tmpdir)
    missing = str(tmpdir.join('missing.json'))
    assert main(['spectrum', '--config', missing, '--out', out]) == \
        EXIT_CONFIG
    assert main(['spectrum', '--nu', '0', '--out', out]) == EXIT_CONFIG
    assert main(['spectrum', '--t', '1', '--t0', '2', '--out', out]) == \
        EXIT_CONFIG
    assert main(['verify', '--checks', 'gap,nope', '--out', out] +
                SMALL) == EXIT_CONFIG
    assert 'error' in capsys.readouterr().err


@pytest.mark.fast
def test_verify_subset(tmpdir):
    """Tests a passing subset of the cross-checks."""
    out = _out(tmpdir)
    code = main(['verify', '--checks', 'gap,orthogonality', '--out', out] +
                SMALL)
    assert code == EXIT_OK
    with open(os.path.join(out, 'verify.json')) as f:
        doc = json.load(f)
    assert doc['passed']
    assert sorted(doc['checks']) == ['gap', 'orthogonality']
    assert doc['schema_version'] == '1.0'


@pytest.mark.fast
def test_verify_detects_corrupted_root(tmpdir, capsys):
    """Tests exit code 2 when a root is shifted off the characteristic
    equation."""
    out = _out(tmpdir)
    code = main(['verify', '--checks', 'localization,trace_bound',
                 '--corrupt-root', '1,3', '--out', out] + SMALL)
    assert code == EXIT_NUMERICAL
    assert 'failed checks' in capsys.readouterr().err
    with open(os.path.join(out, 'verify.json')) as f:
        assert not json.load(f)['passed']


@pytest.mark.slow
def test_control_command(tmpdir):
    """Tests that the written control vanishes from T0 on."""
    out = _out(tmpdir)
    code = main(['control', '--t', '1', '--t0', '0.5', '--out', out] + SMALL)
    assert code == EXIT_OK
    control = pd.read_csv(os.path.join(out, 'control.csv'))
    assert_array_equal(control.loc[control['t'] >= 0.5, 'psi'], 0.)
    assert (control.loc[control['t'] < 0.5, 'psi'] != 0.).any()
    with open(os.path.join(out, 'control.json')) as f:
        doc = json.load(f)
    assert doc['vanishes_after_T0']
    assert os.path.exists(os.path.join(out, 'report.json'))


@pytest.mark.slow
def test_simulate_with_control_off(tmpdir):
    """Tests that simulate with the control off reports free decay."""
    out = _out(tmpdir)
    code = main(['simulate', '--psi-off', '--out', out] + SMALL)
    assert code == EXIT_OK
    with open(os.path.join(out, 'report.json')) as f:
        doc = json.load(f)
    assert doc['control_energy'] == 0.
    assert doc['total_controlled'] == doc['total_uncontrolled']
    control = pd.read_csv(os.path.join(out, 'control.csv'))
    assert_array_equal(control['psi'], 0.)
    for name in ['trajectories.csv', 'trajectories.h5', 'spectrum.csv']:
        assert os.path.exists(os.path.join(out, name))


@pytest.mark.slow
def test_eigen_and_observability_commands(tmpdir):
    """Tests the eigenfunction and observability outputs."""
    out = _out(tmpdir)
    assert main(['eigen', '--out', out] + SMALL) == EXIT_OK
    with open(os.path.join(out, 'traces.json')) as f:
        traces = json.load(f)
    assert traces['nonvanishing']
    assert len(traces['traces']) == 4 * 6
    assert os.path.exists(os.path.join(out, 'eigenfunctions.h5'))
    assert main(['observability', '--out', out] + SMALL) == EXIT_OK
    table = pd.read_csv(os.path.join(out, 'observability.csv'))
    assert sorted(table['m']) == [-2, -1, 1, 2]
    assert (table['smallest_ratio'] > 0).all()


@pytest.mark.fast
def test_usage_errors_exit_with_config_code(tmpdir, capsys):
    """Tests exit code 1 for malformed arguments and 0 for --help."""
    out = _out(tmpdir)
    assert main(['spectrum', '--m-max', 'four', '--out', out]) == EXIT_CONFIG
    assert main(['nosuch']) == EXIT_CONFIG
    assert main([]) == EXIT_CONFIG
    assert 'error' in capsys.readouterr().err
    assert main(['spectrum', '--help']) == EXIT_OK


@pytest.mark.slow
def test_observability_with_late_horizon(tmpdir):
    """Tests whether horizons past T/2 give positive ratios and a passing
    observability check."""
    for t0 in ['0.7', '0.9']:
        out = _out(tmpdir, 'obs' + t0)
        args = ['--t0', t0, '--m-max', '2', '--l-max', '8', '--out', out]
        assert main(['observability'] + args) == EXIT_OK
        table = pd.read_csv(os.path.join(out, 'observability.csv'))
        assert (table['smallest_ratio'] > 0).all()
        with open(os.path.join(out, 'observability.json')) as f:
            doc = json.load(f)
        if t0 == '0.9':
            assert doc['dropped']['1']
        assert main(['verify', '--checks', 'observability'] + args) == \
            EXIT_OK

import json

import pytest

import numpy as np
from numpy.testing import assert_array_equal, assert_raises

from stokesnc.config import (ChannelConfig, ExperimentConfig,
                             LocalizationParams, TruncationConfig,
                             config_summary, load_config, make_config)
from stokesnc.exceptions import ConfigurationError


@pytest.mark.fast
def test_defaults():
    """Tests the default configuration."""
    cfg = ExperimentConfig()
    assert cfg.channel.nu == 1.
    assert cfg.channel.length == 2. * np.pi
    assert cfg.truncation.m_max == 8
    assert cfg.localization.k0 == 20.
    assert cfg.initial_data == {'kind': 'random'}
    assert_array_equal(TruncationConfig(m_max=2).modes, [-2, -1, 1, 2])


@pytest.mark.fast
def test_parameter_validation():
    """Tests rejection of invalid physical and numerical parameters."""
    assert_raises(ConfigurationError, ChannelConfig, nu=0.)
    assert_raises(ConfigurationError, ChannelConfig, nu=np.inf)
    assert_raises(ConfigurationError, ChannelConfig, length=-1.)
    assert_raises(ConfigurationError, ChannelConfig, T=1., T0=1.)
    assert_raises(ConfigurationError, TruncationConfig, m_max=0)
    assert_raises(ConfigurationError, TruncationConfig, l_max=1)
    assert_raises(ConfigurationError, LocalizationParams, epsilon0=2.)
    assert_raises(ConfigurationError, ExperimentConfig, n_y=100)
    assert_raises(ConfigurationError, ExperimentConfig, synthesis_branches=30)
    assert_raises(ConfigurationError, ExperimentConfig, initial_data={})


@pytest.mark.fast
def test_make_config_flat_keys():
    """Tests the flat keys, their aliases and the derived defaults."""
    cfg = make_config({'nu': '0.5', 'L': 4., 'M_max': 3, 'l_max': 4,
                       't0': 0.25, 'seed': 7})
    assert cfg.channel.nu == 0.5
    assert cfg.channel.length == 4.
    assert cfg.channel.T0 == 0.25
    assert cfg.truncation.m_max == 3
    assert cfg.localization.l_max == 4
    assert cfg.synthesis_branches == 4
    assert cfg.observability_branches == 4
    assert cfg.seed == 7
    wide = make_config({'m_max': 40})
    assert wide.n_x == 128
    assert_raises(ConfigurationError, make_config, {'unknown': 1})
    assert_raises(ConfigurationError, make_config, {'nu': 'water'})


@pytest.mark.fast
def test_load_config(tmpdir):
    """Tests reading a JSON file with overrides on top."""
    path = str(tmpdir.join('config.json'))
    with open(path, 'w') as f:
        json.dump({'schema_version': '1.0', 'nu': 0.2, 'm_max': 2,
                   'psi_off': True}, f)
    cfg = load_config(path, {'m_max': 3, 'nu': None})
    assert cfg.channel.nu == 0.2
    assert cfg.truncation.m_max == 3
    assert cfg.psi_off
    bad = str(tmpdir.join('bad.json'))
    with open(bad, 'w') as f:
        f.write('[1, 2]')
    assert_raises(ConfigurationError, load_config, bad)
    assert_raises(ConfigurationError, load_config,
                  str(tmpdir.join('missing.json')))


@pytest.mark.fast
def test_config_views():
    """Tests the flat and nested dictionary views."""
    cfg = make_config({'m_max': 2, 'l_max': 6})
    flat = cfg.to_dict()
    assert flat['M_max'] == 2
    assert flat['L_max'] == 6
    assert 'channel' not in flat
    json.dumps(flat)
    nested = config_summary(cfg)
    assert nested['truncation']['l_max'] == 6
    assert nested['localization']['l_max'] == 6

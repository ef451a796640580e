"""
Physical, numerical and experiment parameters.
"""
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .exceptions import ConfigurationError


SCHEMA_VERSION = '1.0'


@dataclass(frozen=True)
class ChannelConfig:
    """Physical and geometric parameters of the periodic channel.

    Parameters
    ----------
    nu : float
        Kinematic viscosity.
    length : float
        Period L of the channel in x.
    T : float
        Final time at which the controlled state must vanish.
    T0 : float
        Control horizon; the control is switched off on [T0, T).
    """
    nu: float = 1.
    length: float = 2. * np.pi
    T: float = 1.
    T0: float = 0.5

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not np.isfinite(self.nu) or self.nu <= 0:
            raise ConfigurationError('nu must be positive, got %r.'
                                     % self.nu)
        if not np.isfinite(self.length) or self.length <= 0:
            raise ConfigurationError('length must be positive, got %r.'
                                     % self.length)
        if not 0 < self.T0 < self.T:
            raise ConfigurationError('Need 0 < T0 < T, got T0=%r, T=%r.'
                                     % (self.T0, self.T))


@dataclass(frozen=True)
class LocalizationParams:
    """Root localization and refinement parameters.

    Parameters
    ----------
    k0 : float
        Threshold above which every (l pi, (l+1) pi) window is certified
        directly. Used as fallback when no threshold is detected.
    delta : float
        Margin used when certifying sign changes at window endpoints.
    epsilon0 : float
        Allowed shortfall of the root spacing below pi for |k| >= k0.
    scan_resolution : float
        Step of the uniform sign-change scan.
    l_max : int
        Number of branches per mode.
    residual_tol : float
        Largest accepted |rearranged_f| at a refined root.
    bracket_tol : float
        Largest accepted bracket width at a refined root.
    duplicate_tol : float
        Roots closer than this are merged and flagged.
    max_iter : int
        Iteration cap of the safeguarded Newton refinement.
    """
    k0: float = 20.
    delta: float = 1e-3
    epsilon0: float = 0.1
    scan_resolution: float = np.pi / 64
    l_max: int = 20
    residual_tol: float = 1e-10
    bracket_tol: float = 1e-12
    duplicate_tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.k0 <= 0:
            raise ConfigurationError('k0 must be positive.')
        if self.delta <= 0:
            raise ConfigurationError('delta must be positive.')
        if not 0 < self.epsilon0 < np.pi / 2:
            raise ConfigurationError('epsilon0 must lie in (0, pi/2).')
        if not 0 < self.scan_resolution < np.pi / 8:
            raise ConfigurationError('scan_resolution must lie in '
                                     '(0, pi/8).')
        if int(self.l_max) < 1:
            raise ConfigurationError('l_max must be at least 1.')
        if self.residual_tol <= 0 or self.bracket_tol <= 0:
            raise ConfigurationError('Tolerances must be positive.')


@dataclass(frozen=True)
class TruncationConfig:
    """Modal truncation.

    Parameters
    ----------
    m_max : int
        Fourier modes 1 <= |m| <= m_max are retained.
    l_max : int
        Branches per Fourier mode.
    time_steps : int
        Number of steps of the time grid on [0, T].
    """
    m_max: int = 8
    l_max: int = 20
    time_steps: int = 400

    def __post_init__(self):
        self.validate()

    def validate(self):
        if int(self.m_max) < 1:
            raise ConfigurationError('m_max must be at least 1.')
        if int(self.l_max) < 2:
            raise ConfigurationError('l_max must be at least 2.')
        if int(self.time_steps) < 1:
            raise ConfigurationError('time_steps must be at least 1.')

    @property
    def modes(self):
        """Nonzero Fourier indices sorted by m."""
        m = np.arange(1, int(self.m_max) + 1)
        return np.concatenate([-m[::-1], m])


@dataclass
class ExperimentConfig:
    """Full configuration of an end-to-end experiment."""
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    truncation: TruncationConfig = field(default_factory=TruncationConfig)
    localization: LocalizationParams = field(
        default_factory=LocalizationParams)
    synthesis_branches: int = 6
    observability_branches: int = 6
    n_y: int = 2 ** 10 + 1
    n_x: int = 64
    n_sine: int = 4
    seed: int = 0
    regularization: float = 0.
    auto_regularize: bool = True
    oracle_points: int = 256
    oracle_modes: int = 4
    oracle_branches: int = 10
    duality_pairs: int = 100
    detect_k0: bool = True
    psi_off: bool = False
    record_timing: bool = False
    initial_data: dict = field(default_factory=lambda: {'kind': 'random'})

    def __post_init__(self):
        self.validate()

    def validate(self):
        if int(self.synthesis_branches) < 1:
            raise ConfigurationError('synthesis_branches must be positive.')
        if self.synthesis_branches > self.truncation.l_max:
            raise ConfigurationError('synthesis_branches cannot exceed '
                                     'l_max.')
        if self.observability_branches > self.truncation.l_max:
            raise ConfigurationError('observability_branches cannot exceed '
                                     'l_max.')
        if self.n_y < 5 or self.n_y % 2 == 0:
            raise ConfigurationError('n_y must be odd and at least 5.')
        if self.n_x < 2 * self.truncation.m_max + 1:
            raise ConfigurationError('n_x must resolve every retained mode '
                                     '(n_x > 2 m_max).')
        if self.regularization < 0:
            raise ConfigurationError('regularization must be nonnegative.')
        if self.oracle_points < 64:
            raise ConfigurationError('oracle_points must be at least 64.')
        if not isinstance(self.initial_data, dict) or \
                'kind' not in self.initial_data:
            raise ConfigurationError("initial_data needs a 'kind' entry.")

    def to_dict(self):
        """Flat, JSON-serializable view of the configuration."""
        out = {'nu': self.channel.nu, 'L': self.channel.length,
               'T': self.channel.T, 'T0': self.channel.T0,
               'M_max': self.truncation.m_max,
               'L_max': self.truncation.l_max,
               'time_steps': self.truncation.time_steps,
               'k0': self.localization.k0,
               'scan_resolution': self.localization.scan_resolution}
        for f in fields(self):
            if f.name not in ('channel', 'truncation', 'localization'):
                out[f.name] = getattr(self, f.name)
        return out


# flat key -> (section, attribute, type)
_KEYS = {'nu': ('channel', 'nu', float),
         'L': ('channel', 'length', float),
         'length': ('channel', 'length', float),
         'T': ('channel', 'T', float),
         't': ('channel', 'T', float),
         'T0': ('channel', 'T0', float),
         't0': ('channel', 'T0', float),
         'M_max': ('truncation', 'm_max', int),
         'm_max': ('truncation', 'm_max', int),
         'L_max': ('truncation', 'l_max', int),
         'l_max': ('truncation', 'l_max', int),
         'time_steps': ('truncation', 'time_steps', int),
         'k0': ('localization', 'k0', float),
         'delta': ('localization', 'delta', float),
         'epsilon0': ('localization', 'epsilon0', float),
         'scan_resolution': ('localization', 'scan_resolution', float),
         'residual_tol': ('localization', 'residual_tol', float),
         'bracket_tol': ('localization', 'bracket_tol', float)}


def _coerce(name, value, kind):
    try:
        if kind is bool and isinstance(value, str):
            return value.lower() in ('1', 'true', 'yes', 'on')
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigurationError('Invalid value %r for %s.' % (value, name))


def make_config(values=None):
    """Build an :class:`ExperimentConfig` from a flat dictionary.

    Parameters
    ----------
    values : dict or None
        Flat keys such as ``nu``, ``L``, ``T``, ``T0``, ``M_max``,
        ``L_max``, ``synthesis_branches``, ``seed`` or ``initial_data``.

    Returns
    -------
    config : ExperimentConfig
    """
    values = dict(values or {})
    sections = {'channel': {}, 'truncation': {}, 'localization': {}}
    top = {}
    top_types = {f.name: f.type for f in fields(ExperimentConfig)
                 if f.name not in sections}
    for key, value in values.items():
        if key == 'schema_version':
            continue
        if key in _KEYS:
            section, attr, kind = _KEYS[key]
            sections[section][attr] = _coerce(key, value, kind)
        elif key in top_types:
            kind = {'int': int, 'float': float, 'bool': bool}.get(
                getattr(top_types[key], '__name__', top_types[key]))
            top[key] = value if kind is None else _coerce(key, value, kind)
        else:
            raise ConfigurationError('Unknown configuration key %r.' % key)
    if 'l_max' in sections['truncation'] and \
            'l_max' not in sections['localization']:
        sections['localization']['l_max'] = sections['truncation']['l_max']
    l_max = sections['truncation'].get('l_max', TruncationConfig.l_max)
    for key in ('synthesis_branches', 'observability_branches'):
        if key not in top:
            top[key] = min(getattr(ExperimentConfig, key), l_max)
    m_max = sections['truncation'].get('m_max', TruncationConfig.m_max)
    if 'n_x' not in top and 2 * m_max + 1 > ExperimentConfig.n_x:
        top['n_x'] = int(2 ** np.ceil(np.log2(2 * m_max + 1)))
    try:
        return ExperimentConfig(
            channel=ChannelConfig(**sections['channel']),
            truncation=TruncationConfig(**sections['truncation']),
            localization=LocalizationParams(**sections['localization']),
            **top)
    except TypeError as e:
        raise ConfigurationError(str(e))


def load_config(path=None, overrides=None):
    """Read a JSON configuration file and apply flat overrides.

    Parameters
    ----------
    path : str or None
        JSON file holding a flat object. None uses the defaults.
    overrides : dict or None
        Values taking precedence over the file.

    Returns
    -------
    config : ExperimentConfig
    """
    values = {}
    if path is not None:
        try:
            with open(path, 'r') as f:
                values = json.load(f)
        except (OSError, ValueError) as e:
            raise ConfigurationError('Cannot read config %s: %s' % (path, e))
        if not isinstance(values, dict):
            raise ConfigurationError('The config file must hold an object.')
    values.update({key: value for key, value in (overrides or {}).items()
                   if value is not None})
    return make_config(values)


def config_summary(config):
    """Nested dictionary view used in reports."""
    return {'channel': asdict(config.channel),
            'truncation': asdict(config.truncation),
            'localization': asdict(config.localization)}

"""
End-to-end null-control experiments: initial data ingestion, spectrum,
eigenfunctions, control synthesis, modal simulation, cross-checks and
persistence of reports.
"""
import copy
import json
import os
import time
from dataclasses import dataclass, field

import h5py
import numpy as np
import pandas as pd
from sklearn.utils import check_random_state

from .config import SCHEMA_VERSION, ExperimentConfig, config_summary
from .control import (ModalState, ModalSystem, NullController, ControlSignal,
                      time_grid, truncation_sensitivity, uniformity_scan)
from .datasets import (load_initial_data, make_eigenfunction_data,
                       make_modal_data, make_stream_field)
from .exceptions import (ConfigurationError, ConstraintViolation,
                         NumericalError)
from .mpi_utils import load_initial_data_MPI
from .spectral import (ChannelSpectrum, ModeIndex, SpectralRoot,
                       collocation_spectrum_oracle, coefficients,
                       determinant_residual, gap_and_summability,
                       localization_report, modal_eigenfunction,
                       normalize_and_gram, rearranged_f, rearranged_f_prime,
                       trace_bound_report, zero_mode_eigenvalue)
from .spectral.base import SPECTRUM_COLUMNS
from .spectral.eigenfunctions import boundary_residuals, ode_residual
from .utils import (check_logger, fd_derivative, set_verbosity,
                    simpson_integrate, uniform_grid)


CHECKS = ('localization', 'gap', 'orthogonality', 'trace_bound', 'duality',
          'observability', 'oracle')

DIVERGENCE_PASS = 1e-9
DIVERGENCE_CLEAN = 1e-6
MEAN_TOL = 1e-10
WALL_TOL = 1e-10


@dataclass
class InitialData:
    """Initial velocity, either modal or gridded.

    Attributes
    ----------
    alphas : dict or None
        Maps m to the coefficient vector of mode m (modal data).
    sine : ndarray
        Coefficients of the k = 0 family (sin(n pi y), 0) (modal data).
    u0, v0 : ndarray or None
        Velocity samples of shape (n_x, n_y) on a uniform grid of
        [0, L) x [0, 1] (gridded data).
    length : float or None
        Period of the gridded data.
    require_zero_mean : bool
        Reject gridded u0 with a nonzero x-mean. When False, the x-mean is
        projected onto the sine family.
    """
    alphas: dict = None
    sine: np.ndarray = field(default_factory=lambda: np.zeros(0))
    u0: np.ndarray = None
    v0: np.ndarray = None
    length: float = None
    require_zero_mean: bool = True

    def __post_init__(self):
        if (self.alphas is None) == (self.u0 is None):
            raise ValueError('Pass either modal coefficients or gridded '
                             'velocities.')
        if self.u0 is not None:
            self.u0 = np.asarray(self.u0, dtype=float)
            self.v0 = np.asarray(self.v0, dtype=float)
            if self.u0.shape != self.v0.shape or self.u0.ndim != 2:
                raise ValueError('u0 and v0 must be 2-d arrays of one shape.')
        self.sine = np.asarray(self.sine, dtype=float)

    @property
    def gridded(self):
        return self.u0 is not None


@dataclass
class Projection:
    """Modal form of initial data."""
    states: dict
    sine: np.ndarray
    residual: float = 0.
    max_divergence: float = 0.
    cleaned_modes: list = field(default_factory=list)
    unresolved_fraction: float = 0.


@dataclass
class ExperimentReport:
    """Outcome of :meth:`StokesExperiment.run`."""
    seed: int
    config: dict
    modes: list
    sine: list
    total_initial: float
    total_controlled: float
    total_uncontrolled: float
    control_energy: float
    max_moment_residual: float
    max_condition_number: float
    projection_residual: float
    cleaned_modes: list
    k0: float
    min_gap: float
    controlled_below_uncontrolled: bool
    max_tail_norm: float = 0.
    cross_checks: dict = field(default_factory=dict)
    wall_clock: float = None

    @property
    def checks_passed(self):
        return all(r['passed'] for r in self.cross_checks.values())

    def to_dict(self, record_timing=False):
        out = {'schema_version': SCHEMA_VERSION,
               'seed': self.seed,
               'config': self.config,
               'modes': self.modes,
               'sine': self.sine,
               'total_initial': self.total_initial,
               'total_controlled': self.total_controlled,
               'total_uncontrolled': self.total_uncontrolled,
               'control_energy': self.control_energy,
               'max_moment_residual': self.max_moment_residual,
               'max_condition_number': self.max_condition_number,
               'projection_residual': self.projection_residual,
               'cleaned_modes': self.cleaned_modes,
               'k0': self.k0,
               'min_gap': self.min_gap,
               'controlled_below_uncontrolled':
                   self.controlled_below_uncontrolled,
               'max_tail_norm': self.max_tail_norm,
               'cross_checks': self.cross_checks,
               'checks_passed': self.checks_passed}
        if record_timing:
            out['wall_clock'] = self.wall_clock
        return out


def _with_context(error, m, l=None):
    where = 'mode m=%d' % m if l is None else 'mode m=%d, branch l=%d' % (m, l)
    return type(error)('%s: %s' % (where, error))


def project_initial_data(data, eigenfunctions, n_sine=4, length=None):
    """Project initial data onto the retained eigenfunctions.

    Gridded data are Fourier transformed in x; mode m is then projected
    onto the normalized eigenfunctions of m in y and the x-mean of u onto
    sin(n pi y) with ``c_n = 2 int u_mean sin(n pi y) dy``.

    Parameters
    ----------
    data : InitialData
    eigenfunctions : dict
        Maps m to the list of its ModalEigenfunction, ordered by l, all on
        one y-grid.
    n_sine : int
        Number of sine coefficients kept for gridded data.
    length : float or None
        Channel period; must match ``data.length`` when both are set.

    Returns
    -------
    projection : Projection

    Raises
    ------
    ConstraintViolation
        If gridded data have a nonzero x-mean (with ``require_zero_mean``),
        a normal velocity at a wall or a divergence above 1e-6.
    """
    modes = sorted(eigenfunctions)
    if not data.gridded:
        states = {}
        for m in modes:
            eigs = eigenfunctions[m]
            a = np.zeros(len(eigs), dtype=complex)
            given = np.asarray(data.alphas.get(m, []), dtype=complex)
            n = min(given.size, a.size)
            a[:n] = given[:n]
            states[m] = ModalState(eigs[0].mode, a)
        return Projection(states=states, sine=data.sine.copy())

    if length is not None and data.length is not None and \
            not np.isclose(length, data.length):
        raise ConfigurationError('Data period %g differs from L=%g.'
                                 % (data.length, length))
    y = eigenfunctions[modes[0]][0].y
    n_x, n_y = data.u0.shape
    if n_y != y.size:
        raise ValueError('The data have %d y-points, the eigenfunctions %d.'
                         % (n_y, y.size))
    if n_x <= 2 * max(abs(m) for m in modes):
        raise ValueError('n_x=%d cannot resolve the retained modes.' % n_x)

    u_scale = max(np.abs(data.u0).max(), np.abs(data.v0).max(), 1e-300)
    walls = np.abs(data.v0[:, [0, -1]]).max()
    if walls > WALL_TOL * u_scale:
        raise ConstraintViolation('Normal velocity %.3e at a wall.' % walls)

    U = np.fft.fft(data.u0, axis=0) / n_x
    V = np.fft.fft(data.v0, axis=0) / n_x
    mean = U[0].real
    sine = np.zeros(n_sine)
    if np.abs(mean).max() > MEAN_TOL * u_scale:
        if data.require_zero_mean:
            raise ConstraintViolation('u0 has x-mean %.3e.'
                                      % np.abs(mean).max())
        n = np.arange(1, n_sine + 1)
        sine = 2. * simpson_integrate(
            mean[np.newaxis] * np.sin(np.pi * n[:, np.newaxis] * y), y)

    h = y[1] - y[0]
    length = data.length or length or 2. * np.pi
    div_scale = max(max(abs(2. * np.pi * m / length) *
                        np.abs(U[m % n_x]).max() for m in modes), 1e-300)
    states = {}
    cleaned = []
    max_div = 0.
    err_sq = 0.
    tot_sq = 0.
    for m in modes:
        eigs = eigenfunctions[m]
        k = eigs[0].mode.k
        u_m = U[m % n_x].copy()
        v_m = V[m % n_x]
        if max(np.abs(u_m).max(), np.abs(v_m).max()) <= MEAN_TOL * u_scale:
            states[m] = ModalState(eigs[0].mode,
                                   np.zeros(len(eigs), dtype=complex))
            continue
        dv = fd_derivative(v_m, h)
        div = np.abs(1j * k * u_m + dv).max() / div_scale
        max_div = max(max_div, div)
        if div > DIVERGENCE_CLEAN:
            raise ConstraintViolation('mode m=%d: divergence %.3e above '
                                      '%g.' % (m, div, DIVERGENCE_CLEAN))
        if div > DIVERGENCE_PASS:
            u_m = -dv / (1j * k)
            cleaned.append(int(m))
        a = np.array([simpson_integrate(u_m * np.conj(e.phi) +
                                        v_m * np.conj(e.xi), y)
                      for e in eigs])
        states[m] = ModalState(eigs[0].mode, a)
        rec_u = sum(c * e.phi for c, e in zip(a, eigs))
        rec_v = sum(c * e.xi for c, e in zip(a, eigs))
        err_sq += simpson_integrate(np.abs(u_m - rec_u) ** 2 +
                                    np.abs(v_m - rec_v) ** 2, y)
        tot_sq += simpson_integrate(np.abs(u_m) ** 2 + np.abs(v_m) ** 2, y)

    kept = {m % n_x for m in modes} | {0}
    power = (np.abs(U) ** 2 + np.abs(V) ** 2).sum(axis=1)
    lost = sum(power[i] for i in range(n_x) if i not in kept)
    residual = float(np.sqrt(err_sq / tot_sq)) if tot_sq > 0 else 0.
    return Projection(states=states, sine=sine, residual=residual,
                      max_divergence=float(max_div), cleaned_modes=cleaned,
                      unresolved_fraction=float(lost / max(power.sum(),
                                                           1e-300)))


class StokesExperiment:
    """Driver of the spectrum-to-simulation pipeline.

    Every stage is computed on first use and cached, so the CLI can run a
    single stage or the whole chain.

    Parameters
    ----------
    config : ExperimentConfig or None
    comm : MPI communicator
        If passed, the spectrum is distributed across ranks and gridded data
        are read on rank 0 and broadcast.
    n_jobs : int or None
        Worker processes of the spectrum computation.
    corrupt_root : tuple of int or None
        ``(m, l)`` of a root shifted by 0.1 after certification, for fault
        injection in the checks.
    logger : Logger
        The logger to use for messages when ``verbose=True`` in ``run``.
        If *None* is passed, a logger that writes to ``sys.stdout`` will be
        used.
    """

    def __init__(self, config=None, comm=None, n_jobs=None,
                 corrupt_root=None, logger=None):
        self.config = config or ExperimentConfig()
        self.comm = comm
        self.n_jobs = n_jobs
        self.corrupt_root = corrupt_root
        self._logger = check_logger(logger, 'stokes_experiment', comm)
        self.spectrum_ = None
        self.eigenfunctions_ = None
        self.systems_ = None

    @property
    def channel(self):
        return self.config.channel

    def set_verbosity(self, verbose):
        set_verbosity(self._logger, verbose)

    def compute_spectrum(self, verbose=False):
        if self.spectrum_ is not None:
            return self.spectrum_
        cfg = self.config
        spectrum = ChannelSpectrum(
            m_max=cfg.truncation.m_max, l_max=cfg.truncation.l_max,
            nu=self.channel.nu, length=self.channel.length,
            localization=cfg.localization, detect_k0=cfg.detect_k0,
            n_jobs=self.n_jobs, comm=self.comm, logger=self._logger)
        spectrum.fit(verbose=verbose)
        if self.corrupt_root is not None:
            self._corrupt(spectrum, *self.corrupt_root)
        self.spectrum_ = spectrum
        return spectrum

    def _corrupt(self, spectrum, m, l):
        roots = spectrum.roots_.get(int(m))
        if roots is None or not 1 <= l <= len(roots):
            raise ConfigurationError('No root (m=%d, l=%d) to corrupt.'
                                     % (m, l))
        r = roots[l - 1]
        mu = r.mu_tilde + 0.1
        roots[l - 1] = SpectralRoot(
            r.mode, r.l, mu, -self.channel.nu * (r.mode.k ** 2 + mu ** 2),
            float(rearranged_f(mu, r.mode.k)),
            determinant_residual(r.mode, mu), r.bracket, r.bracket_width,
            float(rearranged_f_prime(mu, r.mode.k)))
        spectrum.localization_[int(m)] = localization_report(
            roots, spectrum._params())
        spectrum.gap_report_ = gap_and_summability(spectrum.all_roots(),
                                                   nu=self.channel.nu)
        self._logger.warning('root m=%d, l=%d shifted by 0.1', m, l)

    def compute_eigenfunctions(self):
        if self.eigenfunctions_ is not None:
            return self.eigenfunctions_
        spectrum = self.compute_spectrum()
        y = uniform_grid(self.config.n_y)
        eigs = {}
        for m in sorted(spectrum.roots_):
            eigs[m] = []
            for root in spectrum.roots_[m]:
                try:
                    eigs[m].append(modal_eigenfunction(
                        root, nu=self.channel.nu, y=y))
                except NumericalError as e:
                    raise _with_context(e, m, root.l) from e
        self.eigenfunctions_ = eigs
        return eigs

    def build_systems(self):
        if self.systems_ is None:
            self.systems_ = {
                m: ModalSystem.from_eigenfunctions(eigs)
                for m, eigs in self.compute_eigenfunctions().items()}
        return self.systems_

    def resolve_initial_data(self, options=None):
        """Build :class:`InitialData` from an ``initial_data`` dictionary.

        Kinds: ``zero``, ``random`` (``m_support``, ``l_support``,
        ``scale``), ``eigenfunction`` (``m``, ``l``, ``amplitude``,
        ``sine``), ``modal`` (``coefficients`` as ``[m, l, re, im]`` rows,
        ``sine``), ``stream`` (synthetic gridded field: ``m_support``,
        ``sine``, ``require_zero_mean``) and ``gridded`` (``path`` of an
        HDF5 file with ``u0``, ``v0`` and a ``length`` attribute).
        """
        cfg = self.config
        options = dict(cfg.initial_data if options is None else options)
        kind = options.pop('kind', 'random')
        l_max = cfg.truncation.l_max
        m_max = cfg.truncation.m_max
        if kind == 'zero':
            alphas = {m: np.zeros(l_max, dtype=complex)
                      for m in cfg.truncation.modes}
            return InitialData(alphas=alphas, sine=np.zeros(cfg.n_sine))
        if kind == 'random':
            alphas, sine = make_modal_data(
                m_max=m_max, l_max=l_max,
                m_support=int(options.get('m_support', min(4, m_max))),
                l_support=int(options.get('l_support',
                                          cfg.synthesis_branches)),
                n_sine=cfg.n_sine, scale=float(options.get('scale', 1.)),
                random_state=cfg.seed)
            return InitialData(alphas=alphas, sine=sine)
        if kind == 'eigenfunction':
            m, l = int(options.get('m', 1)), int(options.get('l', 1))
            if not 1 <= abs(m) <= m_max or not 1 <= l <= l_max:
                raise ConfigurationError('Eigenfunction (m=%d, l=%d) is not '
                                         'retained.' % (m, l))
            alphas, sine = make_eigenfunction_data(
                m, l, l_max, float(options.get('amplitude', 1.)),
                options.get('sine'))
            return InitialData(alphas=alphas, sine=sine)
        if kind == 'modal':
            alphas = {m: np.zeros(l_max, dtype=complex)
                      for m in cfg.truncation.modes}
            for row in options.get('coefficients', []):
                m, l, re, im = row
                if int(m) not in alphas or not 1 <= int(l) <= l_max:
                    raise ConfigurationError('Coefficient (m=%s, l=%s) is '
                                             'not retained.' % (m, l))
                alphas[int(m)][int(l) - 1] = re + 1j * im
            return InitialData(alphas=alphas,
                               sine=np.asarray(options.get('sine', []), float))
        if kind == 'stream':
            _, _, u0, v0 = make_stream_field(
                n_x=cfg.n_x, n_y=cfg.n_y,
                m_support=int(options.get('m_support', min(4, m_max))),
                length=self.channel.length, sine=options.get('sine'),
                scale=float(options.get('scale', 1.)), random_state=cfg.seed)
            return InitialData(
                u0=u0, v0=v0, length=self.channel.length,
                require_zero_mean=bool(options.get('require_zero_mean',
                                                options.get('sine') is None)))
        if kind == 'gridded':
            path = options.get('path')
            if path is None or not os.path.exists(path):
                raise ConfigurationError('Initial data file %r not found.'
                                         % path)
            if self.comm is not None:
                u0, v0, length = load_initial_data_MPI(path, comm=self.comm)
            else:
                u0, v0, length = load_initial_data(path)
            return InitialData(u0=u0, v0=v0, length=length,
                               require_zero_mean=bool(
                                   options.get('require_zero_mean', True)))
        raise ConfigurationError('Unknown initial data kind %r.' % kind)

    def project(self, data):
        return project_initial_data(data, self.compute_eigenfunctions(),
                                    n_sine=self.config.n_sine,
                                    length=self.channel.length)

    def synthesize(self, states, verbose=False):
        cfg = self.config
        systems = self.build_systems()
        controller = NullController(
            T=self.channel.T, T0=self.channel.T0,
            n_branches=cfg.synthesis_branches,
            regularization=cfg.regularization,
            auto_regularize=cfg.auto_regularize, logger=self._logger)
        if cfg.psi_off:
            controller.signals_ = {
                m: ControlSignal.zero(
                    s.mode, s.lams[:cfg.synthesis_branches],
                    self.channel.T0, self.channel.T)
                for m, s in sorted(systems.items())}
            controller.energy_ = 0.
            return controller
        return controller.fit(systems, states, verbose=verbose)

    def simulate(self, states, controller):
        """Controlled and uncontrolled trajectories of every mode."""
        t = time_grid(self.channel.T, self.config.truncation.time_steps)
        out = {}
        for m, system in sorted(self.build_systems().items()):
            try:
                controlled = system.forward_controlled(
                    states[m], controller.signals_[m], t)
                free = system.forward_controlled(states[m], None, t)
            except NumericalError as e:
                raise _with_context(e, m) from e
            out[m] = (controlled, free)
        return out

    def run(self, initial_data=None, verbose=False):
        """Run the full pipeline.

        Returns
        -------
        report : ExperimentReport
        """
        start = time.perf_counter()
        self.set_verbosity(verbose)
        cfg = self.config
        spectrum = self.compute_spectrum(verbose=verbose)
        data = initial_data or self.resolve_initial_data()
        projection = self.project(data)
        controller = self.synthesize(projection.states, verbose=verbose)
        trajectories = self.simulate(projection.states, controller)
        self.projection_ = projection
        self.controller_ = controller
        self.trajectories_ = trajectories

        systems = self.build_systems()
        rows = []
        tot = np.zeros(3)
        for m, (controlled, free) in trajectories.items():
            a0 = projection.states[m].alphas
            signal = controller.signals_[m]
            tail = systems[m].tail_norm(projection.states[m], self.channel.T,
                                        cfg.synthesis_branches)
            norms = np.array([np.linalg.norm(a0),
                              controlled.final.norm,
                              free.final.norm])
            tot += norms ** 2
            rows.append({'m': int(m), 'initial_norm': norms[0],
                         'controlled_norm': norms[1],
                         'uncontrolled_norm': norms[2],
                         'energy': signal.energy,
                         'moment_residual': signal.residual,
                         'condition_number': signal.condition_number,
                         'regularization': signal.regularization,
                         'tail_norm': tail})
        tot = np.sqrt(tot)
        cross_checks = self.run_checks()

        T = self.channel.T
        sine_rows = []
        for n, c in enumerate(projection.sine, start=1):
            factor = np.exp(zero_mode_eigenvalue(n, self.channel.nu) * T)
            sine_rows.append({'n': n, 'initial': float(c),
                              'terminal': float(c * factor),
                              'factor': float(factor)})
        self._logger.info('controlled %.3e, uncontrolled %.3e',
                          tot[1], tot[2])
        return ExperimentReport(
            seed=int(cfg.seed), config=cfg.to_dict(), modes=rows,
            sine=sine_rows, total_initial=float(tot[0]),
            total_controlled=float(tot[1]),
            total_uncontrolled=float(tot[2]),
            control_energy=float(controller.energy_),
            max_moment_residual=float(max(r['moment_residual']
                                          for r in rows)),
            max_condition_number=float(max(r['condition_number']
                                           for r in rows)),
            projection_residual=projection.residual,
            cleaned_modes=projection.cleaned_modes,
            k0=float(spectrum.k0_),
            min_gap=float(spectrum.gap_report_['min_gap']),
            controlled_below_uncontrolled=bool(tot[1] <= tot[2] or
                                               tot[1] == 0.),
            max_tail_norm=float(max(r['tail_norm'] for r in rows)),
            cross_checks=cross_checks,
            wall_clock=time.perf_counter() - start)

    # checks

    def check_localization(self):
        spectrum = self.compute_spectrum()
        params = self.config.localization
        failures = []
        for m, rep in sorted(spectrum.localization_.items()):
            ok = (rep['residuals_ok'] and rep['in_intervals'] and
                  rep['none_below_pi'] and rep['ordered'])
            roots = spectrum.roots_[m]
            ok &= all(r.bracket_width <= params.bracket_tol and
                      r.det_residual <= 1e-8 and
                      r.lam < -self.channel.nu * r.mode.k ** 2
                      for r in roots)
            if -m in spectrum.roots_:
                ok &= np.array_equal([r.mu_tilde for r in roots],
                                     [r.mu_tilde
                                      for r in spectrum.roots_[-m]])
            if not ok:
                failures.append(int(m))
        roots = spectrum.all_roots()
        return {'passed': not failures, 'failed_modes': failures,
                'max_char_residual': float(max(abs(r.char_residual)
                                               for r in roots)),
                'max_det_residual': float(max(r.det_residual
                                              for r in roots)),
                'k0': float(spectrum.k0_),
                'l_k': {str(m): rep['l_k']
                        for m, rep in sorted(spectrum.localization_.items())}}

    def check_gap(self):
        rep = self.compute_spectrum().gap_report_
        return {'passed': rep['passed'], 'min_gap': rep['min_gap'],
                'summable': rep['summable'],
                'lower_bound': rep['lower_bound'],
                'simplicity_margin': rep['simplicity_margin']}

    def check_orthogonality(self, n_branches=10):
        eigs = self.compute_eigenfunctions()
        off = 0.
        bc = 0.
        ode = 0.
        for m in sorted(eigs):
            if m < 0:
                continue
            family = [copy.copy(e) for e in eigs[m][:n_branches]]
            off = max(off, normalize_and_gram(family)['off_diagonal_max'])
            for e, root in zip(family, self.spectrum_.roots_[m]):
                c = coefficients(root.mode, root)
                bc = max(bc, boundary_residuals(c, root.mode).max())
                ode = max(ode, ode_residual(c, root.mode, root, e.y,
                                            nu=self.channel.nu))
        return {'passed': bool(off <= 1e-6 and bc <= 1e-8 and ode <= 1e-7),
                'off_diagonal_max': float(off),
                'boundary_residual_max': float(bc),
                'ode_residual_max': float(ode)}

    def check_trace_bound(self):
        rep = trace_bound_report(self.compute_spectrum().all_roots(),
                                 nu=self.channel.nu)
        return {'passed': bool(rep['M'] > 0 and rep['nonvanishing'] and
                               rep['ratio_spread'] <= 1e-6),
                'M': rep['M'], 'ratio_spread': rep['ratio_spread']}

    def check_duality(self):
        cfg = self.config
        systems = self.build_systems()
        modes = sorted(systems)
        rng = check_random_state(cfg.seed)
        t = time_grid(self.channel.T, cfg.truncation.time_steps)
        worst = 0.
        for i in range(int(cfg.duality_pairs)):
            system = systems[modes[i % len(modes)]]
            n = system.n_branches
            alpha = ModalState(system.mode, rng.normal(size=n) +
                               1j * rng.normal(size=n))
            a0 = ModalState(system.mode, rng.normal(size=n) +
                            1j * rng.normal(size=n))
            steps = t.size - 1
            psi = rng.normal(size=steps) + 1j * rng.normal(size=steps)
            lhs, rhs = system.duality_gap(a0, alpha, psi, t, self.channel.T)
            scale = max(abs(lhs), abs(rhs), 1e-300)
            worst = max(worst, abs(lhs - rhs) / scale)
        return {'passed': bool(worst <= 1e-8), 'max_relative_error': worst,
                'pairs': int(cfg.duality_pairs)}

    def check_observability(self):
        cfg = self.config
        systems = self.build_systems()
        n = cfg.observability_branches
        scan = uniformity_scan(systems, n, self.channel.T, self.channel.T0)
        truncation = []
        if cfg.truncation.l_max >= n + 2:
            truncation = [truncation_sensitivity(systems[m], n,
                                                 self.channel.T,
                                                 self.channel.T0)
                          for m in sorted(systems) if m > 0]
        # modes whose added branches all underflow do not test monotonicity
        tested = [r for r in truncation if r['extended']]
        monotone = all(r['nonincreasing'] for r in tested)
        return {'passed': bool(scan['all_positive'] and scan['symmetric'] and
                               monotone),
                'min_ratio': scan['min_ratio'], 'argmin_m': scan['argmin_m'],
                'non_degrading': scan['non_degrading'],
                'truncation_tested_modes': [r['m'] for r in tested],
                'truncation_untested_modes': [r['m'] for r in truncation
                                              if not r['extended']],
                'ratios': {str(r.m): r.smallest_ratio
                           for r in scan['reports']},
                'dropped': {str(r.m): r.dropped for r in scan['reports']
                            if r.dropped}}

    def check_oracle(self):
        cfg = self.config
        spectrum = self.compute_spectrum()
        count = min(cfg.oracle_branches, cfg.truncation.l_max)
        worst = 0.
        for m in range(1, min(cfg.oracle_modes, cfg.truncation.m_max) + 1):
            mode = ModeIndex.from_m(m, self.channel.length)
            oracle = collocation_spectrum_oracle(mode, cfg.oracle_points,
                                                 count, nu=self.channel.nu)
            lams = spectrum.eigenvalues(m)[:count]
            worst = max(worst, float(np.max(np.abs(oracle - lams) /
                                            np.abs(lams))))
        return {'passed': bool(worst <= 1e-6), 'max_relative_error': worst}

    def run_checks(self, checks=None):
        """Run named checks; each result carries a ``passed`` flag.

        A numerical failure inside a check is reported as a failed check.
        """
        checks = CHECKS if checks is None else checks
        unknown = [c for c in checks if c not in CHECKS]
        if unknown:
            raise ConfigurationError('Unknown checks: %s.'
                                     % ', '.join(unknown))
        results = {}
        for name in checks:
            try:
                results[name] = getattr(self, 'check_' + name)()
            except NumericalError as e:
                results[name] = {'passed': False, 'error': str(e)}
            self._logger.info('check %s: %s', name,
                              'pass' if results[name]['passed'] else 'FAIL')
        return results


# persistence

def to_jsonable(obj):
    """Convert numpy scalars and arrays, complex numbers (as [re, im]) and
    nested containers to JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(doc, path):
    doc = dict(doc)
    doc.setdefault('schema_version', SCHEMA_VERSION)
    with open(path, 'w') as f:
        json.dump(to_jsonable(doc), f, indent=2, sort_keys=True)
        f.write('\n')


def write_csv(df, path):
    df.to_csv(path, index=False, float_format='%.16e')


def spectrum_frame(spectrum):
    return spectrum.spectrum_table()[SPECTRUM_COLUMNS]


def eigenfunction_frame(eigenfunctions, stride=8):
    """Long table of eigenfunction samples, every ``stride``-th y-point."""
    frames = []
    for m in sorted(eigenfunctions):
        for e in eigenfunctions[m]:
            sl = slice(None, None, stride)
            frames.append(pd.DataFrame({
                'm': m, 'l': e.l, 'y': e.y[sl],
                're_xi': e.xi[sl].real, 'im_xi': e.xi[sl].imag,
                're_phi': e.phi[sl].real, 'im_phi': e.phi[sl].imag,
                're_q': e.q[sl].real, 'im_q': e.q[sl].imag}))
    return pd.concat(frames, ignore_index=True)


def control_frame(field):
    """Long table (t, x, psi) of an assembled control field."""
    t, x = np.meshgrid(field.t, field.x, indexing='ij')
    return pd.DataFrame({'t': t.ravel(), 'x': x.ravel(),
                         'psi': field.values.ravel()})


def trajectory_frame(trajectories):
    """Per-mode norms over time of controlled and uncontrolled runs."""
    frames = []
    for m, (controlled, free) in sorted(trajectories.items()):
        frames.append(pd.DataFrame({
            'm': m, 't': controlled.t,
            'norm_controlled': np.linalg.norm(controlled.alphas, axis=1),
            'norm_uncontrolled': np.linalg.norm(free.alphas, axis=1)}))
    return pd.concat(frames, ignore_index=True)


def write_eigenfunctions_h5(eigenfunctions, path):
    with h5py.File(path, 'w') as f:
        for m in sorted(eigenfunctions):
            g = f.create_group('m=%d' % m)
            eigs = eigenfunctions[m]
            g.create_dataset('y', data=eigs[0].y)
            g.create_dataset('xi', data=np.array([e.xi for e in eigs]))
            g.create_dataset('phi', data=np.array([e.phi for e in eigs]))
            g.create_dataset('q', data=np.array([e.q for e in eigs]))
            g.create_dataset('lambda', data=np.array([e.lam for e in eigs]))


def write_trajectories_h5(trajectories, path):
    with h5py.File(path, 'w') as f:
        for m, (controlled, free) in sorted(trajectories.items()):
            g = f.create_group('m=%d' % m)
            g.create_dataset('t', data=controlled.t)
            g.create_dataset('alphas_controlled', data=controlled.alphas)
            g.create_dataset('alphas_uncontrolled', data=free.alphas)


def run_experiment(config=None, out_dir=None, initial_data=None, comm=None,
                   logger=None, verbose=False):
    """Run the full pipeline and optionally write its artifacts.

    Parameters
    ----------
    config : ExperimentConfig or None
    out_dir : str or None
        Directory receiving report.json, spectrum.csv, control.csv,
        trajectories.csv and trajectories.h5.
    initial_data : InitialData or None
        Overrides ``config.initial_data``.

    Returns
    -------
    report : ExperimentReport
    experiment : StokesExperiment
    """
    experiment = StokesExperiment(config, comm=comm, logger=logger)
    report = experiment.run(initial_data, verbose=verbose)
    if out_dir is not None and (comm is None or comm.rank == 0):
        write_artifacts(experiment, report, out_dir)
    return report, experiment


def write_artifacts(experiment, report, out_dir):
    cfg = experiment.config
    os.makedirs(out_dir, exist_ok=True)
    doc = report.to_dict(record_timing=cfg.record_timing)
    doc['configuration'] = config_summary(cfg)
    write_json(doc, os.path.join(out_dir, 'report.json'))
    write_csv(spectrum_frame(experiment.spectrum_),
              os.path.join(out_dir, 'spectrum.csv'))
    x = np.arange(cfg.n_x) * experiment.channel.length / cfg.n_x
    t = time_grid(experiment.channel.T, cfg.truncation.time_steps)
    field = experiment.controller_.field(x, t, experiment.channel.length)
    write_csv(control_frame(field), os.path.join(out_dir, 'control.csv'))
    write_csv(trajectory_frame(experiment.trajectories_),
              os.path.join(out_dir, 'trajectories.csv'))
    write_trajectories_h5(experiment.trajectories_,
                          os.path.join(out_dir, 'trajectories.h5'))

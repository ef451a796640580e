import numpy as np
import pandas as pd

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..config import LocalizationParams
from ..exceptions import BracketingFailure, NumericalError
from ..mpi_utils import Bcast_from_root, Gatherv_rows
from ..utils import check_logger, check_n_jobs, map_modes, set_verbosity
from .roots import (ModeIndex, SpectralRoot, compute_mode_roots,
                    detect_k0, gap_and_summability, localization_report)


SPECTRUM_COLUMNS = ['m', 'k', 'l', 'mu_tilde', 'lambda', 'char_residual',
                    'det_residual', 'bracket_lo', 'bracket_hi']

# numeric fields shipped between workers, per root
_N_FIELDS = 7


def _mode_rows(task):
    """Roots of one |m| as a float array of shape (l_max, _N_FIELDS)."""
    abs_m, length, nu, params, k0 = task
    mode = ModeIndex.from_m(abs_m, length)
    roots = compute_mode_roots(mode, nu=nu, params=params, k0=k0)
    return np.array([[r.mu_tilde, r.char_residual, r.det_residual,
                      r.bracket[0], r.bracket[1], r.bracket_width, r.f_prime]
                     for r in roots])


class ChannelSpectrum(BaseEstimator):
    """Certified spectrum of the channel Stokes operator over Fourier modes.

    The roots of the characteristic equation depend on |k| only, so each
    positive ``m`` is computed once and shared with ``-m``. Work over modes
    is split across MPI ranks when ``comm`` is passed, or over ``n_jobs``
    worker processes otherwise.

    Parameters
    ----------
    m_max : int
        Modes 1 <= |m| <= m_max are computed.
    l_max : int
        Branches per mode.
    nu : float
        Viscosity.
    length : float
        Channel period L.
    localization : LocalizationParams or None
        Root localization parameters; ``l_max`` above takes precedence.
    detect_k0 : bool
        If True, the large-|k| threshold is detected from the computed
        wavenumbers; otherwise ``localization.k0`` is used.
    n_jobs : int or None
        Worker processes. None reads ``STOKES_NC_THREADS``.
    comm : MPI communicator
        If passed, modes are distributed across ranks.
    logger : Logger
        The logger to use for messages when ``verbose=True`` in ``fit``.
        If *None* is passed, a logger that writes to ``sys.stdout`` will be
        used.

    Attributes
    ----------
    modes_ : ndarray
        Sorted nonzero mode indices.
    k0_ : float
        Large-|k| threshold in use.
    roots_ : dict
        Maps m to the list of its :class:`SpectralRoot`, ordered by l.
    localization_ : dict
        Maps m to its localization report.
    gap_report_ : dict
        Output of :func:`gap_and_summability` over all modes.
    """

    def __init__(self, m_max=8, l_max=20, nu=1., length=2. * np.pi,
                 localization=None, detect_k0=True, n_jobs=None, comm=None,
                 logger=None):
        self.m_max = m_max
        self.l_max = l_max
        self.nu = nu
        self.length = length
        self.localization = localization
        self.detect_k0 = detect_k0
        self.n_jobs = n_jobs
        self.comm = comm
        self.logger = logger
        self._logger = check_logger(logger, 'channel_spectrum', comm)

    def _params(self):
        base = self.localization or LocalizationParams()
        return LocalizationParams(
            k0=base.k0, delta=base.delta, epsilon0=base.epsilon0,
            scan_resolution=base.scan_resolution, l_max=int(self.l_max),
            residual_tol=base.residual_tol, bracket_tol=base.bracket_tol,
            duplicate_tol=base.duplicate_tol, max_iter=base.max_iter)

    def fit(self, modes=None, verbose=False):
        """Compute and certify the roots of every requested mode.

        Parameters
        ----------
        modes : array-like of int or None
            Nonzero mode indices. Defaults to all 1 <= |m| <= m_max.
        verbose : bool
            A switch indicating whether the fitting should print out messages
            displaying progress.
        """
        set_verbosity(self._logger, verbose)
        if self.nu <= 0:
            raise ValueError('nu must be positive.')
        if modes is None:
            m = np.arange(1, int(self.m_max) + 1)
            modes = np.concatenate([-m[::-1], m])
        modes = np.unique(np.asarray(modes, dtype=int))
        if np.any(modes == 0):
            raise ValueError('Mode m=0 has no characteristic equation.')
        self.modes_ = modes
        params = self._params()
        abs_modes = np.unique(np.abs(modes))

        if self.detect_k0:
            ks = 2. * np.pi * abs_modes / self.length
            self.k0_ = detect_k0(ks, params, nu=self.nu,
                                 logger=self._logger)
        else:
            self.k0_ = float(params.k0)
        self._logger.info('k0 = %g', self.k0_)

        rank = 0
        size = 1
        if self.comm is not None:
            rank = self.comm.rank
            size = self.comm.size

        tasks = [(int(m), self.length, self.nu, params, self.k0_)
                 for m in abs_modes]
        if size > 1:
            my_tasks = np.array_split(np.arange(len(tasks)), size)[rank]
            rows = np.full((my_tasks.size, params.l_max, _N_FIELDS), np.nan)
            for ii, task_idx in enumerate(my_tasks):
                try:
                    rows[ii] = _mode_rows(tasks[task_idx])
                except NumericalError as e:
                    self._logger.warning('%s', e)
                self._logger.info('mode m=%d done', abs_modes[task_idx])
            rows = Gatherv_rows(rows, self.comm, root=0)
            rows = Bcast_from_root(rows, self.comm, root=0)
            failed = np.nonzero(np.isnan(rows).any(axis=(1, 2)))[0]
            if failed.size > 0:
                raise BracketingFailure('mode m=%d: root computation failed.'
                                        % abs_modes[failed[0]])
        else:
            n_jobs = check_n_jobs(self.n_jobs)
            rows = np.array(map_modes(_mode_rows, tasks, n_jobs=n_jobs))

        by_abs = dict(zip(abs_modes, rows))
        self.roots_ = {}
        self.localization_ = {}
        for m in modes:
            mode = ModeIndex.from_m(m, self.length)
            self.roots_[int(m)] = [
                SpectralRoot(mode=mode, l=l, mu_tilde=row[0],
                             lam=-self.nu * (mode.k ** 2 + row[0] ** 2),
                             char_residual=row[1], det_residual=row[2],
                             bracket=(row[3], row[4]), bracket_width=row[5],
                             f_prime=row[6])
                for l, row in enumerate(by_abs[abs(m)], start=1)]
            self.localization_[int(m)] = localization_report(
                self.roots_[int(m)], params)
            self._logger.info('mode m=%d: %d roots certified', m,
                              len(self.roots_[int(m)]))
        self.gap_report_ = gap_and_summability(self.all_roots(), nu=self.nu)
        return self

    def all_roots(self):
        """Every root, sorted by m then l."""
        check_is_fitted(self, 'roots_')
        return [r for m in sorted(self.roots_) for r in self.roots_[m]]

    def roots_for(self, m):
        check_is_fitted(self, 'roots_')
        return self.roots_[int(m)]

    def eigenvalues(self, m):
        """Eigenvalues of mode m, decreasing."""
        return np.array([r.lam for r in self.roots_for(m)])

    def spectrum_table(self):
        """Spectrum as a DataFrame with the columns of ``SPECTRUM_COLUMNS``.
        """
        rows = [r.as_row() for r in self.all_roots()]
        return pd.DataFrame(rows, columns=SPECTRUM_COLUMNS)

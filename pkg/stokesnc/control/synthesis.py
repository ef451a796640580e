"""
Moment-method synthesis of the normal-velocity boundary control.

For each nonzero mode the control is sought in the span of the exponentials
{e^{lambda_l (T0 - t)}} on (0, T0) and vanishes on [T0, T). Driving the
retained coefficients to zero at time T requires the moments

    int_0^T0 psi_k(t) conj(q_k(1, t; e_l)) dt = -a_l(0) e^{lambda_l T},

which reduce to a linear system with the Gram matrix of the exponential
family.
"""
from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.linalg as spl

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..exceptions import ConjugacyViolation, IllConditioned, NumericalError
from ..utils import check_logger, set_verbosity
from .dynamics import ModalState


MAX_CONDITION = 1e14
CONJUGACY_TOL = 1e-10


@dataclass
class MomentProblem:
    """Moment problem of one mode.

    Attributes
    ----------
    exponents : ndarray of float
        lambda_l, strictly decreasing.
    weights : ndarray of complex
        Pressure trace weights ``-(nu / k^2) xi'''_l(1)``.
    targets : ndarray of complex
        Required moments.
    horizon : float
        Control horizon T0.
    T : float
        Final time.
    """
    exponents: np.ndarray
    weights: np.ndarray
    targets: np.ndarray
    horizon: float
    T: float

    def __post_init__(self):
        self.exponents = np.asarray(self.exponents, dtype=float)
        self.weights = np.asarray(self.weights, dtype=complex)
        self.targets = np.asarray(self.targets, dtype=complex)
        if np.any(np.diff(self.exponents) >= 0):
            raise ValueError('exponents must be strictly decreasing.')
        if np.any(self.weights == 0):
            raise ValueError('weights must be nonzero.')
        if not 0 < self.horizon < self.T:
            raise ValueError('Need 0 < horizon < T.')
        if not (self.exponents.shape == self.weights.shape ==
                self.targets.shape):
            raise ValueError('exponents, weights and targets must have the '
                             'same length.')

    @property
    def scaled_weights(self):
        """``w_l e^{lambda_l (T - T0)}``, the weights seen from t = T0."""
        return self.weights * np.exp(self.exponents * (self.T - self.horizon))


@dataclass
class ControlSignal:
    """Control of one mode, ``psi(t) = sum_l c_l e^{lambda_l (T0 - t)}`` on
    (0, T0) and zero on [T0, T)."""
    mode: object
    exponents: np.ndarray
    coeffs: np.ndarray
    T0: float
    T: float
    residual: float = 0.
    condition_number: float = 1.
    regularization: float = 0.
    energy: float = 0.

    def evaluate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        on = t < self.T0
        out = np.zeros(t.shape, dtype=complex)
        e = np.exp(self.exponents[np.newaxis] *
                   (self.T0 - t[on, np.newaxis]))
        out[on] = e @ self.coeffs
        return out

    def exponential_integral(self, lams, t0, t1):
        """``int_t0^t1 e^{lam (t1 - s)} psi(s) ds`` for each ``lam``.

        Each term is written with nonpositive exponents only.
        """
        lams = np.asarray(lams, dtype=float)
        tau = min(t1, self.T0)
        if tau <= t0:
            return np.zeros(lams.shape, dtype=complex)
        s = lams[:, np.newaxis] + self.exponents[np.newaxis]
        terms = (np.exp(lams[:, np.newaxis] * (t1 - tau)) *
                 np.exp(self.exponents[np.newaxis] * (self.T0 - tau)) *
                 np.expm1(s * (tau - t0)) / s)
        return terms @ self.coeffs

    def conjugate(self, mode):
        """Signal of the mirrored mode, ``conj(psi)``."""
        return ControlSignal(mode, self.exponents, np.conj(self.coeffs),
                             self.T0, self.T, self.residual,
                             self.condition_number, self.regularization,
                             self.energy)

    @classmethod
    def zero(cls, mode, exponents, T0, T):
        exponents = np.asarray(exponents, dtype=float)
        return cls(mode, exponents, np.zeros(exponents.shape, dtype=complex),
                   T0, T)


@dataclass
class ControlField:
    """Assembled real boundary control ``psi(x, t)``."""
    x: np.ndarray
    t: np.ndarray
    values: np.ndarray
    max_mean: float
    vanishes_after_T0: bool


def target_moments(initial, exponents, T):
    """Moments ``-a_l(0) e^{lambda_l T}`` that null the retained branches.
    """
    exponents = np.asarray(exponents, dtype=float)
    return -initial.alphas[:exponents.size] * np.exp(exponents * T)


def gram_matrix(exponents, horizon):
    """Gram matrix ``int_0^T0 e^{(lambda_l + lambda_m) s} ds`` in closed form.
    """
    exponents = np.asarray(exponents, dtype=float)
    s = exponents[:, np.newaxis] + exponents[np.newaxis]
    G = np.full(s.shape, float(horizon))
    nz = s != 0
    G[nz] = np.expm1(s[nz] * horizon) / s[nz]
    return G


def solve_biorthogonal(problem, regularization=0., auto_regularize=False,
                       mode=None, logger=None):
    """Solve the moment problem of one mode.

    The coefficients solve ``(G + eps I) c = r`` with G the Gram matrix on
    (0, T0) and ``r_l = target_l / conj(w_l e^{lambda_l (T - T0)})``.

    Parameters
    ----------
    problem : MomentProblem
    regularization : float
        Tikhonov parameter eps.
    auto_regularize : bool
        If True and eps = 0, an ill-conditioned Gram matrix is solved with
        ``eps = 1e-12 trace(G) / L`` instead of raising.
    mode : ModeIndex or None
        Recorded on the returned signal.
    logger : Logger or None

    Returns
    -------
    signal : ControlSignal

    Raises
    ------
    IllConditioned
        If eps = 0, the condition number of G exceeds 1e14 and
        ``auto_regularize`` is False.
    """
    if regularization < 0:
        raise ValueError('regularization must be nonnegative.')
    G = gram_matrix(problem.exponents, problem.horizon)
    L = G.shape[0]
    cond = float(np.linalg.cond(G))
    eps = float(regularization)
    if eps == 0. and cond > MAX_CONDITION:
        if not auto_regularize:
            raise IllConditioned(
                'Gram matrix condition number %.3e exceeds %.0e with %d '
                'branches; regularize or reduce the branch count.'
                % (cond, MAX_CONDITION, L))
        eps = 1e-12 * np.trace(G) / L
        if logger is not None:
            logger.warning('condition number %.3e, regularizing with '
                           'eps=%.3e', cond, eps)

    scaled = np.conj(problem.scaled_weights)
    rhs = problem.targets / scaled
    if np.all(rhs == 0):
        coeffs = np.zeros(L, dtype=complex)
    else:
        coeffs = spl.solve(G + eps * np.eye(L), rhs, assume_a='sym')
    achieved = scaled * (G @ coeffs)
    scale = np.linalg.norm(problem.targets)
    residual = float(np.linalg.norm(achieved - problem.targets) / scale) \
        if scale > 0 else 0.
    energy = float(np.real(np.vdot(coeffs, G @ coeffs)))
    return ControlSignal(mode, problem.exponents, coeffs, problem.horizon,
                         problem.T, residual=residual, condition_number=cond,
                         regularization=eps, energy=energy)


def assemble_field(signals, x_grid, t_grid, length=2. * np.pi):
    """Real boundary control ``psi(x, t) = sum_m psi_m(t) e^{i k_m x}``.

    Parameters
    ----------
    signals : dict
        Maps m to the :class:`ControlSignal` of that mode; every m must come
        with -m.
    x_grid : ndarray
        Uniform periodic grid of [0, L) (endpoint excluded).
    t_grid : ndarray
    length : float

    Returns
    -------
    field : ControlField

    Raises
    ------
    ConjugacyViolation
        If the signals of m and -m are not complex conjugates.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    samples = {m: signals[m].evaluate(t_grid) for m in sorted(signals)}
    for m in sorted(samples):
        if m == 0:
            raise ConjugacyViolation('A k=0 control component is not '
                                     'allowed.')
        if -m not in samples:
            raise ConjugacyViolation('Mode m=%d has no partner -m.' % m)
        ref = max(1., np.abs(samples[m]).max())
        gap = np.abs(samples[-m] - np.conj(samples[m])).max()
        if gap > CONJUGACY_TOL * ref:
            raise ConjugacyViolation('Signals of m=%d and m=%d differ from '
                                     'conjugates by %.3e.' % (m, -m, gap))
    values = np.zeros((t_grid.size, x_grid.size), dtype=complex)
    for m in sorted(samples):
        k = 2. * np.pi * m / length
        values += samples[m][:, np.newaxis] * np.exp(1j * k * x_grid)
    values = values.real
    T0 = min(s.T0 for s in signals.values()) if signals else np.inf
    after = t_grid >= T0
    return ControlField(x=x_grid, t=t_grid, values=values,
                        max_mean=float(np.abs(values.mean(axis=1)).max()),
                        vanishes_after_T0=bool(np.all(values[after] == 0.)))


def _is_mirror(a, b):
    return a.shape == b.shape and np.array_equal(a, np.conj(b))


class NullController(BaseEstimator):
    """Per-mode moment-method null controller.

    Parameters
    ----------
    T : float
        Final time.
    T0 : float
        Control horizon.
    n_branches : int
        Branches per mode entering the moment problem; deeper branches
        decay freely.
    regularization : float
        Tikhonov parameter of every solve.
    auto_regularize : bool
        Fall back to a small regularization when a Gram matrix is
        ill-conditioned.
    logger : Logger
        The logger to use for messages when ``verbose=True`` in ``fit``.
        If *None* is passed, a logger that writes to ``sys.stdout`` will be
        used.

    Attributes
    ----------
    signals_ : dict
        Maps m to its :class:`ControlSignal`.
    energy_ : float
        Total control energy ``sum_m int_0^T0 |psi_m|^2 dt``.
    """

    def __init__(self, T=1., T0=0.5, n_branches=6, regularization=0.,
                 auto_regularize=True, logger=None):
        self.T = T
        self.T0 = T0
        self.n_branches = n_branches
        self.regularization = regularization
        self.auto_regularize = auto_regularize
        self.logger = logger
        self._logger = check_logger(logger, 'null_controller')

    def fit(self, systems, initial, verbose=False):
        """Synthesize the control of every mode.

        Parameters
        ----------
        systems : dict
            Maps m to its :class:`ModalSystem`.
        initial : dict
            Maps m to its initial :class:`ModalState`.
        verbose : bool
            A switch indicating whether the fitting should print out messages
            displaying progress.
        """
        set_verbosity(self._logger, verbose)
        if not 0 < self.T0 < self.T:
            raise ValueError('Need 0 < T0 < T.')
        self.signals_ = {}
        # positive modes first so that mirrored data reuse their solve
        for m in sorted(systems, key=lambda m: (abs(m), -m)):
            system = systems[m].truncate(self.n_branches)
            state = initial.get(m)
            if state is None:
                state = ModalState(system.mode,
                                   np.zeros(system.n_branches))
            partner = self.signals_.get(-m)
            if (partner is not None and -m in initial and
                    _is_mirror(initial[-m].alphas, state.alphas) and
                    np.array_equal(systems[-m].traces, systems[m].traces)):
                self.signals_[m] = partner.conjugate(system.mode)
                continue
            problem = MomentProblem(
                system.lams, system.weights,
                target_moments(state, system.lams, self.T),
                self.T0, self.T)
            try:
                signal = solve_biorthogonal(problem, self.regularization,
                                            self.auto_regularize,
                                            mode=system.mode,
                                            logger=self._logger)
            except NumericalError as e:
                raise type(e)('mode m=%d: %s' % (m, e)) from e
            self._logger.info('mode m=%d: residual %.2e, condition %.2e',
                              m, signal.residual, signal.condition_number)
            self.signals_[m] = signal
        self.signals_ = {m: self.signals_[m] for m in sorted(self.signals_)}
        self.energy_ = float(sum(s.energy for s in self.signals_.values()))
        return self

    def field(self, x_grid, t_grid, length=2. * np.pi):
        check_is_fitted(self, 'signals_')
        return assemble_field(self.signals_, x_grid, t_grid, length)

    def coefficient_table(self):
        """Per-mode coefficients, one row per (m, l)."""
        check_is_fitted(self, 'signals_')
        rows = []
        for m, s in self.signals_.items():
            for l, c in enumerate(s.coeffs, start=1):
                rows.append({'m': m, 'l': l, 're_c': c.real, 'im_c': c.imag,
                             'residual': s.residual,
                             'condition_number': s.condition_number})
        return pd.DataFrame(rows, columns=['m', 'l', 're_c', 'im_c',
                                           'residual', 'condition_number'])

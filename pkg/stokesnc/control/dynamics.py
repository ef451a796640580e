"""
Modal forward and adjoint dynamics of one Fourier mode.

In the normalized eigenbasis of mode k the controlled system is diagonal,

    da_l/dt = lambda_l a_l + b_l psi_k(t),    b_l = conj(w_l),
    w_l = -(nu / k^2) xi'''_l(1) = q_l(1),

and the adjoint state with terminal data alpha at time T has boundary
pressure q_k(1, t) = sum_l alpha_l e^{lambda_l (T - t)} w_l. Both are
integrated exactly, so no time-discretization error enters.
"""
from dataclasses import dataclass

import numpy as np

from ..exceptions import StepTooLarge
from ..spectral.roots import zero_mode_eigenvalue
from ..utils import simpson_integrate, uniform_grid


MAX_EXPONENT = 50.


@dataclass
class ModalState:
    """Coefficients of one Fourier mode at time ``t``.

    ``mode`` is the ModeIndex the coefficients belong to.
    """
    mode: object
    alphas: np.ndarray
    t: float = 0.

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=complex)
        if self.alphas.ndim != 1:
            raise ValueError('alphas must be a vector.')
        if not np.all(np.isfinite(self.alphas)):
            raise ValueError('alphas must be finite.')

    @property
    def norm(self):
        return float(np.linalg.norm(self.alphas))


@dataclass
class Trajectory:
    """Modal coefficients on a time grid, ``alphas[i]`` at ``t[i]``."""
    mode: object
    t: np.ndarray
    alphas: np.ndarray

    @property
    def final(self):
        return ModalState(self.mode, self.alphas[-1], float(self.t[-1]))


def time_grid(T, time_steps):
    return np.linspace(0., T, int(time_steps) + 1)


class ModalSystem:
    """Diagonal modal system of a single nonzero Fourier mode.

    Parameters
    ----------
    mode : ModeIndex
    lams : array-like of float
        Eigenvalues lambda_l, decreasing.
    traces : array-like of complex
        xi'''_l(1) of the normalized eigenfunctions.
    nu : float
        Viscosity.
    """

    def __init__(self, mode, lams, traces, nu=1.):
        self.mode = mode
        self.lams = np.asarray(lams, dtype=float)
        self.traces = np.asarray(traces, dtype=complex)
        self.nu = nu
        if self.lams.shape != self.traces.shape:
            raise ValueError('lams and traces must have the same length.')

    @classmethod
    def from_eigenfunctions(cls, eigs):
        eigs = sorted(eigs, key=lambda e: e.l)
        return cls(eigs[0].mode, [e.lam for e in eigs],
                   [e.xi_ppp_1 for e in eigs], nu=eigs[0].nu)

    def truncate(self, n_branches):
        n = int(n_branches)
        return ModalSystem(self.mode, self.lams[:n], self.traces[:n], self.nu)

    @property
    def n_branches(self):
        return self.lams.size

    @property
    def weights(self):
        """Pressure trace weights ``w_l = -(nu / k^2) xi'''_l(1)``."""
        return -self.nu / self.mode.k ** 2 * self.traces

    @property
    def input_coeffs(self):
        """Input coefficients ``b_l = conj(w_l)`` of the boundary control."""
        return np.conj(self.weights)

    def adjoint_evolve(self, terminal, t, T):
        """Adjoint coefficients ``alpha_l e^{lambda_l (T - t)}`` at time t.
        """
        if not 0 <= t <= T:
            raise ValueError('t must lie in [0, T].')
        return ModalState(self.mode,
                          terminal.alphas * np.exp(self.lams * (T - t)), t)

    def adjoint_pressure_trace(self, terminal, t_grid, T):
        """Boundary pressure q_k(1, t) of the adjoint solution on a grid.
        """
        t_grid = np.asarray(t_grid, dtype=float)
        decay = np.exp(self.lams[np.newaxis] * (T - t_grid[:, np.newaxis]))
        return decay @ (terminal.alphas * self.weights)

    def _check_steps(self, h):
        worst = np.abs(self.lams).max() * np.max(h)
        if worst > MAX_EXPONENT:
            raise StepTooLarge(
                'm=%s: |lambda| h = %.1f exceeds %g; refine the time grid.'
                % (getattr(self.mode, 'm', self.mode), worst, MAX_EXPONENT))

    def forward_controlled(self, initial, psi, t_grid):
        """Integrate the controlled modal ODE exactly on a time grid.

        Parameters
        ----------
        initial : ModalState
            Coefficients at ``t_grid[0]``.
        psi : ndarray, ControlSignal or None
            Either one control value per step (piecewise constant), an
            exponential-sum :class:`ControlSignal` of this mode, or None for
            the uncontrolled evolution.
        t_grid : ndarray
            Increasing times.

        Returns
        -------
        trajectory : Trajectory
        """
        t_grid = np.asarray(t_grid, dtype=float)
        h = np.diff(t_grid)
        if np.any(h <= 0):
            raise ValueError('t_grid must be increasing.')
        self._check_steps(h)
        lams = self.lams
        b = self.input_coeffs
        alphas = np.empty((t_grid.size, lams.size), dtype=complex)
        alphas[0] = initial.alphas

        if psi is None:
            for i, hi in enumerate(h):
                alphas[i + 1] = np.exp(lams * hi) * alphas[i]
        elif hasattr(psi, 'exponential_integral'):
            for i, hi in enumerate(h):
                drive = psi.exponential_integral(lams, t_grid[i],
                                                 t_grid[i + 1])
                alphas[i + 1] = np.exp(lams * hi) * alphas[i] + b * drive
        else:
            psi = np.asarray(psi, dtype=complex)
            if psi.shape != h.shape:
                raise ValueError('psi needs one value per time step.')
            for i, hi in enumerate(h):
                alphas[i + 1] = (np.exp(lams * hi) * alphas[i] +
                                 b * psi[i] * np.expm1(lams * hi) / lams)
        return Trajectory(self.mode, t_grid, alphas)

    def trace_integral(self, terminal, psi, t_grid, T):
        """``int_0^T psi(t) conj(q_k(1, t)) dt`` for piecewise-constant psi,
        integrated exactly step by step."""
        t_grid = np.asarray(t_grid, dtype=float)
        lams = self.lams[np.newaxis]
        e = np.exp(lams * (T - t_grid[:, np.newaxis]))
        steps = (e[:-1] - e[1:]) / lams
        q_weights = np.conj(terminal.alphas * self.weights)
        return complex(np.asarray(psi) @ (steps @ q_weights))

    def duality_gap(self, initial, terminal, psi, t_grid, T):
        """Both sides of the duality identity
        <a(T), alpha> - <a(0), alpha e^{lambda T}> = int psi conj(q(1, t)).

        Returns
        -------
        lhs, rhs : complex
        """
        traj = self.forward_controlled(initial, psi, t_grid)
        lhs = (np.vdot(terminal.alphas, traj.alphas[-1]) -
               np.vdot(terminal.alphas * np.exp(self.lams * T),
                       initial.alphas))
        rhs = self.trace_integral(terminal, psi, t_grid, T)
        return complex(lhs), rhs

    def tail_norm(self, initial, T, n_keep):
        """Uncontrolled size ``sum_{l > n_keep} |a_l(0)| e^{lambda_l T}`` of
        the branches left to free decay."""
        a = np.abs(initial.alphas[n_keep:])
        return float(np.sum(a * np.exp(self.lams[n_keep:a.size + n_keep] *
                                       T)))


def sine_mode_invariant(n, u_profile, t, nu=1., y=None, length=2. * np.pi):
    """Value at time t of ``int_0^L int_0^1 u sin(n pi y) dy dx``.

    The k = 0 sine directions are not reached by the boundary control and
    decay at exactly ``-nu n^2 pi^2``.

    Parameters
    ----------
    n : int
        Sine index, at least 1.
    u_profile : ndarray
        x-mean of the initial horizontal velocity on a uniform y-grid.
    t : float
    nu : float
    y : ndarray or None
        Grid of ``u_profile``; uniform on [0, 1] when None.
    length : float
        Channel period.
    """
    u_profile = np.asarray(u_profile, dtype=float)
    y = uniform_grid(u_profile.size) if y is None else y
    value0 = length * simpson_integrate(u_profile * np.sin(n * np.pi * y), y)
    return float(np.exp(zero_mode_eigenvalue(n, nu) * t) * value0)

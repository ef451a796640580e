"""
Characteristic equation of the channel Stokes operator, localization and
refinement of its roots.

For a Fourier mode k != 0 the eigenvalues are lambda = -nu (k^2 + mu^2) where
mu > 0 solves

    F(mu, k) = sin(mu) sinh(k) mu^2 - 2 k mu (1 - cosh(k) cos(mu))
               - k^2 sin(mu) sinh(k) = 0.

All evaluations go through forms divided by cosh(k) so that no exponential
of |k| is ever formed.
"""
from dataclasses import dataclass

import numpy as np

from ..exceptions import BracketingFailure, NonConvergence
from ..config import LocalizationParams


@dataclass(frozen=True)
class ModeIndex:
    """Nonzero Fourier mode ``m`` with wavenumber ``k = 2 pi m / L``."""
    m: int
    k: float

    def __post_init__(self):
        if int(self.m) == 0:
            raise ValueError('Mode m=0 has no characteristic equation.')
        if not np.isfinite(self.k) or self.k == 0:
            raise ValueError('The wavenumber must be finite and nonzero.')

    @classmethod
    def from_m(cls, m, length=2. * np.pi):
        return cls(int(m), 2. * np.pi * int(m) / length)

    @property
    def abs_k(self):
        return abs(self.k)


@dataclass(frozen=True)
class SpectralRoot:
    """One certified root of the characteristic equation.

    Attributes
    ----------
    mode : ModeIndex
    l : int
        Branch index, starting at 1 and ordered by increasing ``mu_tilde``.
    mu_tilde : float
    lam : float
        Eigenvalue ``-nu (k^2 + mu_tilde^2)``.
    char_residual : float
        Value of :func:`rearranged_f` at ``mu_tilde``.
    det_residual : float
        Normalized modulus of the boundary-condition determinant.
    bracket : tuple of float
        Bracket the refinement started from.
    bracket_width : float
        Width of the sign-change bracket at convergence.
    f_prime : float
        Derivative of :func:`rearranged_f` at the root (simplicity margin).
    """
    mode: ModeIndex
    l: int
    mu_tilde: float
    lam: float
    char_residual: float
    det_residual: float
    bracket: tuple
    bracket_width: float
    f_prime: float

    def with_nu(self, nu):
        """Same root, eigenvalue recomputed for viscosity ``nu``."""
        return SpectralRoot(self.mode, self.l, self.mu_tilde,
                            -nu * (self.mode.k ** 2 + self.mu_tilde ** 2),
                            self.char_residual, self.det_residual,
                            self.bracket, self.bracket_width, self.f_prime)

    def as_row(self):
        return {'m': self.mode.m, 'k': self.mode.k, 'l': self.l,
                'mu_tilde': self.mu_tilde, 'lambda': self.lam,
                'char_residual': self.char_residual,
                'det_residual': self.det_residual,
                'bracket_lo': self.bracket[0], 'bracket_hi': self.bracket[1]}


def _sech(k):
    e = np.exp(-np.abs(k))
    return 2. * e / (1. + e * e)


def _check_k(k):
    if np.any(np.asarray(k) == 0):
        raise ValueError('The wavenumber k must be nonzero.')


def char_eq(mu_tilde, k, scaled=False):
    """Characteristic function F(mu_tilde, k).

    Parameters
    ----------
    mu_tilde : float or ndarray
    k : float
        Nonzero wavenumber.
    scaled : bool
        If True, return F / cosh(k), which stays finite for any k.

    Returns
    -------
    F : float or ndarray
    """
    _check_k(k)
    mu = np.asarray(mu_tilde, dtype=float)
    if scaled:
        out = (np.sin(mu) * np.tanh(k) * (mu ** 2 - k ** 2) -
               2. * k * mu * (_sech(k) - np.cos(mu)))
    else:
        out = (np.sin(mu) * np.sinh(k) * mu ** 2 -
               2. * k * mu * (1. - np.cosh(k) * np.cos(mu)) -
               k ** 2 * np.sin(mu) * np.sinh(k))
    return out[()] if out.ndim == 0 else out


def rearranged_f(mu_tilde, k):
    """Rearranged characteristic function, even in k.

    ``f = 1/cosh k - cos mu - tanh k sin mu (mu^2 - k^2) / (2 k mu)``, equal
    to ``-F / (2 k mu cosh k)``, so its positive zeros are those of F.
    """
    _check_k(k)
    mu = np.asarray(mu_tilde, dtype=float)
    if np.any(mu == 0):
        raise ValueError('rearranged_f is singular at mu_tilde = 0.')
    ak = abs(k)
    g = (mu ** 2 - ak ** 2) / (2. * ak * mu)
    out = _sech(ak) - np.cos(mu) - np.tanh(ak) * np.sin(mu) * g
    return out[()] if out.ndim == 0 else out


def rearranged_f_prime(mu_tilde, k):
    """Derivative of :func:`rearranged_f` with respect to ``mu_tilde``."""
    _check_k(k)
    mu = np.asarray(mu_tilde, dtype=float)
    if np.any(mu == 0):
        raise ValueError('rearranged_f is singular at mu_tilde = 0.')
    ak = abs(k)
    g = (mu ** 2 - ak ** 2) / (2. * ak * mu)
    dg = (mu ** 2 + ak ** 2) / (2. * ak * mu ** 2)
    out = np.sin(mu) - np.tanh(ak) * (np.cos(mu) * g + np.sin(mu) * dg)
    return out[()] if out.ndim == 0 else out


def determinant_residual(mode, mu_tilde):
    """Normalized modulus of the 4x4 boundary-condition determinant.

    The columns are the boundary data of the four exponentials
    ``e^{ky}, e^{-ky}, e^{mu y}, e^{-mu y}`` with ``mu = i mu_tilde``; each
    column is scaled to unit exponential size before assembly and the
    determinant is divided by the product of the column norms (Hadamard's
    bound), giving a number in [0, 1] that vanishes exactly at roots.
    """
    k = mode.k
    mu = 1j * float(mu_tilde)
    s1 = np.exp(-max(k, 0.))
    s2 = np.exp(-max(-k, 0.))
    ek = np.exp(k - max(k, 0.))
    emk = np.exp(-k - max(-k, 0.))
    cols = np.array([[s1, k * s1, ek, k * ek],
                     [s2, -k * s2, emk, -k * emk],
                     [1., mu, np.exp(mu), mu * np.exp(mu)],
                     [1., -mu, np.exp(-mu), -mu * np.exp(-mu)]],
                    dtype=complex).T
    det = np.linalg.det(cols)
    scale = np.prod(np.linalg.norm(cols, axis=0))
    return float(abs(det) / scale)


def zero_mode_eigenvalue(n, nu=1.):
    """Eigenvalue ``-nu pi^2 n^2`` of the k = 0 family (sin(n pi y), 0)."""
    if int(n) != n or n < 1:
        raise ValueError('n must be a positive integer, got %r.' % n)
    return -nu * np.pi ** 2 * int(n) ** 2


def _sign_changes(values):
    s = np.signbit(values)
    return np.nonzero(s[..., :-1] != s[..., 1:])


def _scan_brackets(k, params):
    """Sign-change brackets of rearranged_f on (0, (l_max + 1) pi]."""
    res = params.scan_resolution
    top = (params.l_max + 1) * np.pi
    n = int(np.ceil((top - res / 2.) / res)) + 1
    grid = np.linspace(res / 2., top, n)
    idx = _sign_changes(rearranged_f(grid, k))[0]
    return [(grid[i], grid[i + 1]) for i in idx]


def bracket_roots(mode, params=None, k0=None):
    """Disjoint brackets, one per branch l = 1..l_max.

    Parameters
    ----------
    mode : ModeIndex
    params : LocalizationParams
    k0 : float or None
        Large-|k| threshold; ``params.k0`` when None.

    Returns
    -------
    brackets : list of tuple
        Ordered intervals, each holding one sign change of
        :func:`rearranged_f`.

    Raises
    ------
    BracketingFailure
        If a window holds the wrong number of sign changes.
    """
    params = params or LocalizationParams()
    k0 = params.k0 if k0 is None else k0
    k = mode.abs_k
    l_max = int(params.l_max)

    if k >= k0:
        n_sub = int(np.ceil(np.pi / params.scan_resolution))
        ls = np.arange(1, l_max + 1)
        grid = (ls[:, np.newaxis] +
                np.linspace(0., 1., n_sub + 1)[np.newaxis]) * np.pi
        values = rearranged_f(grid, k)
        ends = np.abs(values[:, [0, -1]])
        if np.any(ends < params.delta):
            raise BracketingFailure(
                'm=%d: |f| at a window endpoint is below delta=%g.'
                % (mode.m, params.delta))
        counts = np.bincount(_sign_changes(values)[0], minlength=l_max)
        bad = np.nonzero(counts != 1)[0]
        if bad.size > 0:
            raise BracketingFailure(
                'm=%d: window (%d pi, %d pi) holds %d sign changes.'
                % (mode.m, ls[bad[0]], ls[bad[0]] + 1, counts[bad[0]]))
        res = params.scan_resolution
        low = np.linspace(res / 2., np.pi, n_sub)
        n_low = _sign_changes(rearranged_f(low, k))[0].size
        if n_low > 0:
            raise BracketingFailure('m=%d: %d sign changes in (0, pi).'
                                    % (mode.m, n_low))
        return [(l * np.pi, (l + 1) * np.pi) for l in ls]

    brackets = _scan_brackets(k, params)
    if len(brackets) < l_max:
        raise BracketingFailure(
            'm=%d: scan found %d sign changes, %d required; refine '
            'scan_resolution.' % (mode.m, len(brackets), l_max))
    mids = np.array([0.5 * (lo + hi) for lo, hi in brackets])
    counts = window_counts(mids, l_max + 1)
    crowded = np.nonzero(counts > 1)[0]
    if crowded.size > 0:
        raise BracketingFailure(
            'm=%d: %d sign changes near %d pi.'
            % (mode.m, counts[crowded[0]], crowded[0] + 1))
    return brackets[:l_max]


def window_counts(mu, n_windows):
    """Number of roots in each window (l pi - pi/4, l pi + pi/4),
    l = 1..n_windows."""
    mu = np.asarray(mu, dtype=float)
    nearest = np.rint(mu / np.pi).astype(int)
    inside = np.abs(mu - nearest * np.pi) < np.pi / 4.
    nearest = nearest[inside & (nearest >= 1) & (nearest <= n_windows)]
    return np.bincount(nearest - 1, minlength=n_windows)[:n_windows]


def refine_root(bracket, mode, l=1, nu=1., params=None):
    """Refine a sign-change bracket into a certified :class:`SpectralRoot`.

    Safeguarded Newton iteration on :func:`rearranged_f`: Newton steps are
    taken while they stay inside the current bracket and shrink fast enough,
    bisection otherwise. The bracket is updated after every evaluation.

    Parameters
    ----------
    bracket : tuple of float
        Interval with a sign change of :func:`rearranged_f`.
    mode : ModeIndex
    l : int
        Branch index recorded on the root.
    nu : float
        Viscosity.
    params : LocalizationParams

    Returns
    -------
    root : SpectralRoot

    Raises
    ------
    NonConvergence
        If the tolerances are not reached within ``params.max_iter``
        iterations.
    """
    params = params or LocalizationParams()
    k = mode.abs_k
    tol = params.bracket_tol
    a, b = float(bracket[0]), float(bracket[1])
    fa, fb = rearranged_f(a, k), rearranged_f(b, k)
    if np.signbit(fa) == np.signbit(fb):
        raise ValueError('The bracket (%g, %g) has no sign change.' % (a, b))

    x = 0.5 * (a + b)
    dx_old = dx = b - a
    converged = False
    for _ in range(int(params.max_iter)):
        fx = rearranged_f(x, k)
        dfx = rearranged_f_prime(x, k)
        if fx == 0.:
            a = b = x
            fa = fb = fx
            converged = True
            break
        if np.signbit(fx) == np.signbit(fa):
            a, fa = x, fx
        else:
            b, fb = x, fx
        best = min(abs(fa), abs(fb))
        if b - a <= tol and best <= params.residual_tol:
            converged = True
            break
        newton_ok = (dfx != 0. and abs(2. * fx) <= abs(dx_old * dfx))
        if newton_ok:
            step = fx / dfx
            if abs(step) < tol / 4.:
                # close the bracket from the other side
                step = np.copysign(tol / 4., step)
            x_new = x - step
            newton_ok = a < x_new < b
        dx_old = dx
        if newton_ok:
            dx = abs(x_new - x)
            x = x_new
        else:
            dx = 0.5 * (b - a)
            x = a + dx
    if not converged:
        raise NonConvergence(
            'm=%d, l=%d: refinement stopped at bracket (%.17g, %.17g) with '
            'residual %.3e.' % (mode.m, l, a, b, min(abs(fa), abs(fb))))

    mu, f_mu = (a, fa) if abs(fa) <= abs(fb) else (b, fb)
    return SpectralRoot(mode=mode, l=int(l), mu_tilde=mu,
                        lam=-nu * (mode.k ** 2 + mu ** 2),
                        char_residual=float(f_mu),
                        det_residual=determinant_residual(mode, mu),
                        bracket=(float(bracket[0]), float(bracket[1])),
                        bracket_width=b - a,
                        f_prime=float(rearranged_f_prime(mu, k)))


def compute_mode_roots(mode, nu=1., params=None, k0=None, logger=None):
    """Bracket and refine the first ``params.l_max`` roots of one mode.

    Roots depend on |k| only, so modes m and -m give bitwise identical
    ``mu_tilde`` values.
    """
    params = params or LocalizationParams()
    brackets = bracket_roots(mode, params, k0=k0)
    roots = [refine_root(br, mode, l=l, nu=nu, params=params)
             for l, br in enumerate(brackets, start=1)]
    mus = np.array([r.mu_tilde for r in roots])
    close = np.nonzero(np.diff(mus) <= params.duplicate_tol)[0]
    if close.size > 0:
        raise BracketingFailure(
            'm=%d: roots l=%d and l=%d closer than %g.'
            % (mode.m, close[0] + 1, close[0] + 2, params.duplicate_tol))
    if logger is not None:
        logger.debug('mode m=%d: %d roots certified', mode.m, len(roots))
    return roots


def localization_report(roots, params=None):
    """Localization facts for the roots of a single mode.

    Returns
    -------
    report : dict
        ``l_k`` is the smallest window index from which every window
        (l pi - pi/4, l pi + pi/4), up to ``l_max``, holds exactly one root
        (None if no such index), ``n_below`` the number of roots below
        ``l_k pi - pi/4``, ``in_intervals`` whether root l lies in
        (l pi, (l+1) pi) for every l and ``simplicity_margin`` the smallest
        |f'| over the roots.
    """
    params = params or LocalizationParams()
    mode = roots[0].mode
    mus = np.array([r.mu_tilde for r in roots])
    ls = np.array([r.l for r in roots])
    n = len(roots)
    counts = window_counts(mus, n)
    ones = counts == 1
    l_k = None
    for l in range(n, 0, -1):
        if not ones[l - 1]:
            break
        l_k = l
    n_below = None if l_k is None else \
        int(np.sum(mus < l_k * np.pi - np.pi / 4.))
    offsets = np.abs(mus - np.pi * np.rint(mus / np.pi))
    in_intervals = bool(np.all((mus > ls * np.pi) &
                               (mus < (ls + 1) * np.pi)))
    residual_ok = bool(np.all([abs(r.char_residual) <= params.residual_tol
                               for r in roots]))
    return {'m': int(mode.m), 'k': float(mode.k),
            'n_roots': n,
            'l_k': l_k,
            'n_below': n_below,
            'large_k': bool(mode.abs_k >= params.k0),
            'in_intervals': in_intervals,
            'none_below_pi': bool(mus.min() > np.pi),
            'residuals_ok': residual_ok,
            'ordered': bool(np.all(np.diff(mus) > 0)),
            'simplicity_margin': float(np.min([abs(r.f_prime)
                                               for r in roots])),
            'max_offset': float(offsets.max()),
            'offsets': offsets.tolist()}


def gap_and_summability(roots, l0=0, nu=None):
    """Spectral gap, summability and lower-bound checks over several modes.

    Parameters
    ----------
    roots : list of SpectralRoot
        Roots of one or more modes; sorted by ``l`` within each mode.
    l0 : int
        Branches ``l <= l0`` are excluded from the partial sums and the
        ``mu_tilde > l pi / 4`` check.
    nu : float or None
        Viscosity; inferred from the first root when None.

    Returns
    -------
    report : dict
    """
    if len(roots) == 0:
        raise ValueError('No roots supplied.')
    if nu is None:
        r = roots[0]
        nu = -r.lam / (r.mode.k ** 2 + r.mu_tilde ** 2)
    by_mode = {}
    for r in roots:
        by_mode.setdefault(r.mode.m, []).append(r)

    min_gap = np.inf
    ordered = True
    lower_bound = True
    summable = True
    partial_sums = {}
    comparison = {}
    margins = []
    for m in sorted(by_mode):
        rs = sorted(by_mode[m], key=lambda r: r.l)
        lam = np.array([r.lam for r in rs])
        mu = np.array([r.mu_tilde for r in rs])
        ls = np.array([r.l for r in rs])
        if lam.size > 1:
            gaps = lam[:-1] - lam[1:]
            min_gap = min(min_gap, gaps.min())
            ordered &= bool(np.all(np.diff(mu) > 0) and np.all(gaps > 0))
        tail = ls > l0
        partial_sums[m] = float(np.sum(1. / -lam[tail]))
        comparison[m] = float(np.sum(16. / (nu * np.pi ** 2 *
                                            ls[tail] ** 2)))
        summable &= partial_sums[m] <= comparison[m]
        lower_bound &= bool(np.all(mu[tail] > ls[tail] * np.pi / 4.))
        margins.append(min(abs(r.f_prime) for r in rs))

    gap_positive = bool(np.isfinite(min_gap) and min_gap > 0)
    return {'min_gap': float(min_gap),
            'gap_positive': gap_positive,
            'ordered': bool(ordered),
            'partial_sums': partial_sums,
            'comparison_sums': comparison,
            'summable': bool(summable),
            'lower_bound': bool(lower_bound),
            'simplicity_margin': float(min(margins)),
            'passed': bool(gap_positive and ordered and summable and
                           lower_bound)}


def _roots_separated(mus, epsilon0):
    ls = np.arange(1, mus.size + 1)
    return bool(np.all((mus > ls * np.pi) & (mus < (ls + 1) * np.pi)) and
                np.all(np.diff(mus) > np.pi - epsilon0))


def detect_k0(ks, params=None, nu=1., logger=None):
    """Smallest |k| from which the large-|k| localization holds.

    For each |k| the roots are obtained by the uniform scan; a value passes
    when branch l sits in (l pi, (l+1) pi) for every l and consecutive roots
    are more than ``pi - epsilon0`` apart. The returned threshold is the
    smallest tested |k| such that it and every larger tested |k| pass.

    Returns
    -------
    k0 : float
        Detected threshold, or ``params.k0`` when no tested |k| qualifies.
    """
    params = params or LocalizationParams()
    ks = np.unique(np.abs(np.asarray(ks, dtype=float)))
    detected = None
    for k in ks[::-1]:
        mode = ModeIndex(1, k)
        try:
            roots = compute_mode_roots(mode, nu=nu, params=params,
                                       k0=np.inf)
        except BracketingFailure:
            break
        mus = np.array([r.mu_tilde for r in roots])
        if not _roots_separated(mus, params.epsilon0):
            break
        detected = float(k)
    if detected is None:
        if logger is not None:
            logger.warning('no k0 detected, falling back to k0=%g',
                           params.k0)
        return float(params.k0)
    return detected

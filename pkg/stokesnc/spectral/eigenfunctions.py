"""
Closed-form eigenfunctions (phi, xi, q) of the channel Stokes operator.

For a root mu_tilde of mode k the vertical velocity is

    xi(y) = C1 e^{ky} + C2 e^{-ky} + C3 e^{mu y} + C4 e^{-mu y},

with mu = i mu_tilde, the horizontal velocity phi = (i/k) xi' and the pressure
q = [(lambda + nu k^2) phi - nu phi''] / (ik). Coefficients are stored
multiplied by e^{-|k|} so that every sample is O(1) in double precision.
Modes k and -k share xi and q; their phi are complex conjugates.
"""
from dataclasses import dataclass

import numpy as np

from ..exceptions import DegenerateCoefficients
from ..utils import simpson_integrate, uniform_grid


DEFAULT_N_POINTS = 2 ** 10 + 1


@dataclass(frozen=True)
class EigenfunctionCoefficients:
    """Coefficients C1..C4 of xi, scaled by e^{-|k|}, and ``mu = i mu_tilde``.
    """
    C1: complex
    C2: complex
    C3: complex
    C4: complex
    mu: complex

    @property
    def vector(self):
        return np.array([self.C1, self.C2, self.C3, self.C4])


@dataclass
class ModalEigenfunction:
    """Sampled, normalized eigenfunction of one (m, l) pair.

    Attributes
    ----------
    mode : ModeIndex
    l : int
    lam : float
        Eigenvalue.
    nu : float
        Viscosity the eigenvalue was computed with.
    y : ndarray, shape (n_points,)
    xi, phi, q : ndarray of complex, shape (n_points,)
    xi_ppp_1 : complex
        xi'''(1) of the normalized eigenfunction.
    norm_sq : float
        Squared L2(0,1)^2 norm of the stored samples.
    raw_norm_sq : float
        Squared norm before normalization (coefficient scaling).
    scale : complex
        Factor applied to the raw samples (phase rotation and normalization).
    trace_ratio : complex
        Closed-form xi'''(1) over the term-by-term derivative, raw scaling.
    """
    mode: object
    l: int
    lam: float
    nu: float
    y: np.ndarray
    xi: np.ndarray
    phi: np.ndarray
    q: np.ndarray
    xi_ppp_1: complex
    norm_sq: float
    raw_norm_sq: float
    scale: complex
    trace_ratio: complex

    @property
    def q_1(self):
        return self.q[-1]

    def rescale(self, factor):
        self.xi = self.xi * factor
        self.phi = self.phi * factor
        self.q = self.q * factor
        self.xi_ppp_1 = self.xi_ppp_1 * factor
        self.scale = self.scale * factor
        self.norm_sq = self.norm_sq * abs(factor) ** 2


def _nu_of(root):
    return -root.lam / (root.mode.k ** 2 + root.mu_tilde ** 2)


def coefficients(mode, root):
    """Coefficients C1..C4 of xi for a certified root.

    The expressions make xi'(0), xi(1) and xi'(1) vanish identically in
    mu_tilde, while xi(0) is proportional to the characteristic function,
    so the four boundary conditions hold exactly at roots.

    Parameters
    ----------
    mode : ModeIndex
    root : SpectralRoot

    Returns
    -------
    coeffs : EigenfunctionCoefficients
        Coefficients multiplied by e^{-|k|}; |k| is used so that k and -k
        share them.

    Raises
    ------
    DegenerateCoefficients
        If all four coefficients vanish.
    """
    k = mode.abs_k
    mu_t = float(root.mu_tilde)
    mu = 1j * mu_t

    def E(a):
        return np.exp(a - k)

    two_k = 2. * k * np.exp(-k)
    c1 = (mu ** 2 * (E(-(mu + k)) - E(mu - k)) +
          mu * (two_k - k * (E(-(mu + k)) + E(mu - k))))
    c2 = (mu ** 2 * (E(mu + k) - E(-(mu - k))) +
          mu * (two_k - k * (E(-(mu - k)) + E(mu + k))))
    c3 = (mu * (two_k - k * (E(-(mu + k)) + E(-(mu - k)))) +
          k ** 2 * (E(-(mu + k)) - E(-(mu - k))))
    c4 = (mu * (two_k - k * (E(mu + k) + E(mu - k))) +
          k ** 2 * (E(mu + k) - E(mu - k)))
    coeffs = EigenfunctionCoefficients(complex(c1), complex(c2), complex(c3),
                                       complex(c4), complex(mu))
    scale = (1. + mu_t ** 2) * (1. + k)
    if np.all(np.abs(coeffs.vector) < 1e-14 * scale):
        raise DegenerateCoefficients(
            'm=%d, l=%d: all coefficients vanish at mu_tilde=%.17g.'
            % (mode.m, root.l, mu_t))
    return coeffs


def evaluate_xi(coeffs, mode, y, n_derivatives=3):
    """xi and its analytic derivatives on a grid.

    Parameters
    ----------
    coeffs : EigenfunctionCoefficients
    mode : ModeIndex
    y : ndarray
        Points of [0, 1].
    n_derivatives : int
        Highest derivative order returned.

    Returns
    -------
    derivatives : ndarray of complex, shape (n_derivatives + 1, n_points)
        Row j holds the j-th derivative of xi (e^{-|k|} scaling).
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(y > 1):
        raise ValueError('y must lie in [0, 1].')
    k = mode.abs_k
    mu = coeffs.mu
    terms = np.array([coeffs.C1 * np.exp(k * y),
                      coeffs.C2 * np.exp(-k * y),
                      coeffs.C3 * np.exp(mu * y),
                      coeffs.C4 * np.exp(-mu * y)])
    rates = np.array([k, -k, mu, -mu])
    out = np.empty((n_derivatives + 1, y.size), dtype=complex)
    for j in range(n_derivatives + 1):
        out[j] = np.sum(rates[:, np.newaxis] ** j * terms, axis=0)
    return out


def evaluate_phi(coeffs, mode, y):
    """Horizontal velocity ``phi = (i/k) xi'`` from the divergence relation
    ``ik phi + xi' = 0``."""
    dxi = evaluate_xi(coeffs, mode, y, n_derivatives=1)[1]
    return 1j / mode.k * dxi


def evaluate_q(coeffs, mode, root, y, nu=None):
    """Pressure ``q = [(lambda + nu k^2) xi' - nu xi'''] / k^2``.

    This is ``[(lambda + nu k^2) phi - nu phi''] / (ik)`` with phi replaced
    by (i/k) xi'; it fixes the additive constant of q so that
    ``q(1) = -(nu / k^2) xi'''(1)``.
    """
    nu = _nu_of(root) if nu is None else nu
    d = evaluate_xi(coeffs, mode, y, n_derivatives=3)
    k2 = mode.k ** 2
    return ((root.lam + nu * k2) * d[1] - nu * d[3]) / k2


def xi_triple_prime_at_one(mode, root, nu=None):
    """Closed form of xi'''(1) in the coefficient scaling, times e^{-|k|}.

    ``-4ik (lambda/nu) [mu_t {(2k/sinh k)(1 - cosh k cos mu_t) + k sinh k}
    + k^2 sin mu_t]`` with every hyperbolic factor divided by e^{|k|}.
    """
    nu = _nu_of(root) if nu is None else nu
    k = mode.abs_k
    mu_t = float(root.mu_tilde)
    e = np.exp(-k)
    sinh_s = 0.5 * (1. - e * e)
    cosh_s = 0.5 * (1. + e * e)
    a = 2. * k * e * (e - cosh_s * np.cos(mu_t)) / sinh_s
    b = k * sinh_s
    c = k ** 2 * np.sin(mu_t) * e
    return complex(-4j * k * (root.lam / nu) * (mu_t * (a + b) + c))


def modal_eigenfunction(root, nu=None, y=None, n_points=DEFAULT_N_POINTS):
    """Assemble, phase-rotate and normalize the eigenfunction of a root.

    The samples are multiplied by the conjugate phase of the largest |xi|
    sample, which makes xi real, and scaled to unit L2(0,1)^2 norm.

    Parameters
    ----------
    root : SpectralRoot
    nu : float or None
        Viscosity; inferred from the root when None.
    y : ndarray or None
        Uniform grid with an odd number of points; built from ``n_points``
        when None.
    n_points : int

    Returns
    -------
    eig : ModalEigenfunction
    """
    mode = root.mode
    nu = _nu_of(root) if nu is None else nu
    y = uniform_grid(n_points) if y is None else np.asarray(y, dtype=float)
    coeffs = coefficients(mode, root)
    d = evaluate_xi(coeffs, mode, y, n_derivatives=3)
    k = mode.k
    xi = d[0]
    phi = 1j / k * d[1]
    q = ((root.lam + nu * k ** 2) * d[1] - nu * d[3]) / k ** 2
    xi3_raw = evaluate_xi(coeffs, mode, np.array([1.]), n_derivatives=3)[3, 0]

    raw_norm_sq = float(simpson_integrate(np.abs(phi) ** 2 + np.abs(xi) ** 2,
                                          y))
    peak = xi[np.argmax(np.abs(xi))]
    scale = np.conj(peak / abs(peak)) / np.sqrt(raw_norm_sq)
    closed = xi_triple_prime_at_one(mode, root, nu=nu)
    return ModalEigenfunction(mode=mode, l=int(root.l), lam=float(root.lam),
                              nu=float(nu), y=y,
                              xi=xi * scale, phi=phi * scale, q=q * scale,
                              xi_ppp_1=complex(xi3_raw * scale),
                              norm_sq=1.,
                              raw_norm_sq=raw_norm_sq,
                              scale=complex(scale),
                              trace_ratio=complex(closed / xi3_raw))


def inner_product(a, b):
    """L2(0,1)^2 inner product of two eigenfunctions on the same grid."""
    return simpson_integrate(a.phi * np.conj(b.phi) + a.xi * np.conj(b.xi),
                             a.y)


def normalize_and_gram(eigs):
    """Normalize a family of one mode and return its Gram matrix.

    Parameters
    ----------
    eigs : list of ModalEigenfunction
        Eigenfunctions of a single mode, sampled on one grid.

    Returns
    -------
    report : dict
        ``gram`` (complex ndarray), ``off_diagonal_max`` and
        ``diagonal_max_error``.
    """
    if len({e.mode.m for e in eigs}) > 1:
        raise ValueError('All eigenfunctions must share one mode.')
    for e in eigs:
        n = float(np.real(inner_product(e, e)))
        e.rescale(1. / np.sqrt(n))
        e.norm_sq = float(np.real(inner_product(e, e)))
    n = len(eigs)
    gram = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            gram[i, j] = inner_product(eigs[i], eigs[j])
    off = gram - np.diag(np.diag(gram))
    return {'m': int(eigs[0].mode.m),
            'gram': gram,
            'off_diagonal_max': float(np.abs(off).max()) if n > 1 else 0.,
            'diagonal_max_error': float(np.abs(np.diag(gram) - 1.).max())}


def boundary_residuals(coeffs, mode):
    """Relative residuals of xi(0), xi(1), xi'(0), xi'(1)."""
    d = evaluate_xi(coeffs, mode, np.array([0., 1.]), n_derivatives=1)
    grid = evaluate_xi(coeffs, mode, uniform_grid(257), n_derivatives=0)[0]
    ref = np.abs(grid).max()
    return np.abs(np.array([d[0, 0], d[0, 1], d[1, 0], d[1, 1]])) / ref


def ode_residual(coeffs, mode, root, y, nu=None):
    """Relative residual of nu xi'''' - (lambda + 2 nu k^2) xi''
    + k^2 (lambda + nu k^2) xi with analytic derivatives."""
    nu = _nu_of(root) if nu is None else nu
    d = evaluate_xi(coeffs, mode, y, n_derivatives=4)
    lam, k2 = root.lam, mode.k ** 2
    res = nu * d[4] - (lam + 2. * nu * k2) * d[2] + k2 * (lam + nu * k2) * d[0]
    return float(np.abs(res).max() / np.abs(nu * d[4]).max())


def trace_bound_report(roots, nu=None):
    """Empirical constant of the lower bound
    |xi'''(1)| >= M k^2 e^{|k|} |lambda| mu_tilde over a set of roots.

    The closed form is used in the coefficient scaling; with every factor
    divided by e^{|k|} the ratio reduces to ``4 |bracket| / (nu |k| mu_t)``.
    Also returns the ratio of the closed form to the term-by-term third
    derivative, which is 1 at every exact root.

    Returns
    -------
    report : dict
        ``M`` (the infimum), ``ratios`` per root, ``trace_ratios`` and
        ``ratio_spread`` (largest deviation of a trace ratio from the first
        ratio of its mode).
    """
    ratios = []
    trace_ratios = []
    spread = 0.
    first = {}
    for root in roots:
        mode = root.mode
        nu_r = _nu_of(root) if nu is None else nu
        closed = xi_triple_prime_at_one(mode, root, nu=nu_r)
        k = mode.abs_k
        ratios.append(abs(closed) / (k ** 2 * abs(root.lam) * root.mu_tilde))
        coeffs = coefficients(mode, root)
        xi3 = evaluate_xi(coeffs, mode, np.array([1.]), n_derivatives=3)[3, 0]
        tr = closed / xi3
        trace_ratios.append(tr)
        first.setdefault(mode.m, tr)
        spread = max(spread, abs(tr - first[mode.m]) / abs(first[mode.m]))
    ratios = np.array(ratios)
    return {'M': float(ratios.min()),
            'ratios': ratios,
            'trace_ratios': np.array(trace_ratios),
            'ratio_spread': float(spread),
            'nonvanishing': bool(np.all(ratios > 0))}

"""
Independent discretization of the clamped fourth-order eigenproblem

    nu xi'''' - (lambda + 2 nu k^2) xi'' + k^2 (lambda + nu k^2) xi = 0,
    xi(0) = xi(1) = xi'(0) = xi'(1) = 0,

used to cross-check the eigenvalues obtained from the characteristic
equation. The problem is written as ``A c = -lambda B c`` with

    A = nu (S4 + 2 k^2 S2 + k^4 S0),    B = S2 + k^2 S0,

where S_j are the stiffness/mass matrices of a Legendre basis whose
members satisfy both clamped conditions at each wall.
"""
import numpy as np
from numpy.polynomial import legendre
from scipy.linalg import eigh
from scipy.special import roots_legendre


def clamped_legendre_basis(n_points):
    """Legendre coefficients of the clamped basis.

    ``phi_j = L_j - 2 (2j+5)/(2j+7) L_{j+2} + (2j+3)/(2j+7) L_{j+4}`` on
    [-1, 1], j = 0..n_points-5; each member and its derivative vanish at
    x = -1 and x = 1.

    Returns
    -------
    P : ndarray, shape (n_points, n_points - 4)
        Column j holds the Legendre coefficients of phi_j.
    """
    n_points = int(n_points)
    n_basis = n_points - 4
    j = np.arange(n_basis)
    P = np.zeros((n_points, n_basis))
    P[j, j] = 1.
    P[j + 2, j] = -2. * (2. * j + 5.) / (2. * j + 7.)
    P[j + 4, j] = (2. * j + 3.) / (2. * j + 7.)
    return P


def _basis_matrices(n_points):
    x, w = roots_legendre(n_points + 2)
    P = clamped_legendre_basis(n_points)
    values = []
    for order in range(3):
        coef = legendre.legder(P, m=order, axis=0) if order else P
        values.append(legendre.legvander(x, coef.shape[0] - 1) @ coef)
    S = [v.T @ (w[:, np.newaxis] * v) for v in values]
    d = 1. / np.sqrt(np.diag(S[2]))
    return [s * d[:, np.newaxis] * d[np.newaxis] for s in S]


def collocation_spectrum_oracle(mode, n_points=256, count=10, nu=1.):
    """Leading eigenvalues of the clamped problem for one mode.

    Parameters
    ----------
    mode : ModeIndex
    n_points : int
        Number of Legendre degrees (basis size ``n_points - 4``); at least 64.
    count : int
        Number of eigenvalues returned.
    nu : float
        Viscosity.

    Returns
    -------
    eigenvalues : ndarray, shape (count,)
        The ``count`` largest (least negative) eigenvalues, decreasing.
    """
    n_points = int(n_points)
    if n_points < 64:
        raise ValueError('n_points must be at least 64.')
    n_basis = n_points - 4
    if not 0 < count <= n_basis // 2:
        raise ValueError('count must lie in [1, %d].' % (n_basis // 2))
    S0, S1, S2 = _basis_matrices(n_points)
    k2 = mode.k ** 2
    # map y = (x + 1) / 2: each y-derivative brings a factor 2, dy = dx / 2
    A = 0.5 * nu * (16. * S2 + 8. * k2 * S1 + k2 ** 2 * S0)
    B = 0.5 * (4. * S1 + k2 * S0)
    theta = eigh(B, A, eigvals_only=True,
                 subset_by_index=[n_basis - count, n_basis - 1])
    return np.sort(-1. / theta)[::-1]


def oracle_mu_tilde(eigenvalues, mode, nu=1.):
    """Roots mu_tilde = sqrt(-lambda / nu - k^2) of oracle eigenvalues."""
    return np.sqrt(-np.asarray(eigenvalues) / nu - mode.k ** 2)

"""
Empirical observability constants of the adjoint system.

For terminal data alpha of one mode, the observed quantity is
int_0^T0 |q_k(1, t)|^2 dt and the adjoint state at t = 0 has squared norm
sum_l |alpha_l|^2 e^{2 lambda_l T}. Both quadratic forms are assembled in
the coordinates gamma_l = alpha_l e^{lambda_l (T - T0)} of the adjoint state
at t = T0, where

    Q_lm = conj(w_l) w_m G_lm,    N = diag(e^{2 lambda_l T0}),

with G the Gram matrix of the exponentials on (0, T0). Their Rayleigh
quotient equals the one in the alpha coordinates.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as spl

from ..exceptions import NumericalBreakdown
from .synthesis import gram_matrix


UNDERFLOW_EXPONENT = -600.
MIN_EIGENVALUE = 1e-300


@dataclass
class ObservabilityReport:
    """Smallest observability ratio of one mode.

    ``direction`` is the minimizing adjoint state in the gamma coordinates.
    """
    m: int
    n_branches: int
    smallest_ratio: float
    direction: np.ndarray
    condition_q: float = np.nan
    condition_n: float = np.nan
    dropped: list = field(default_factory=list)

    def as_row(self):
        return {'m': self.m, 'L_effective': self.n_branches,
                'smallest_ratio': self.smallest_ratio,
                'condition_Q': self.condition_q,
                'condition_N': self.condition_n}


def kept_branches(lams, T, T0):
    """Mask of the branches whose exponents stay representable.

    A branch is kept when both ``2 lambda T0`` (the diagonal of N) and
    ``2 lambda (T - T0)`` (the change to gamma coordinates) are at least
    -600.
    """
    lams = 2. * np.asarray(lams)
    return ((lams * T0 >= UNDERFLOW_EXPONENT) &
            (lams * (T - T0) >= UNDERFLOW_EXPONENT))


def observation_gram(system, T, T0, drop_underflow=True):
    """Quadratic forms (Q, N) of the observability inequality.

    Parameters
    ----------
    system : ModalSystem
    T, T0 : float
    drop_underflow : bool
        Exclude the branches rejected by :func:`kept_branches` from both
        forms.

    Returns
    -------
    Q, N : ndarray
        Hermitian matrices.
    dropped : list of int
        Branch indices (starting at 1) excluded from the forms.
    """
    lams = system.lams
    keep = kept_branches(lams, T, T0) if drop_underflow else \
        np.ones(lams.shape, dtype=bool)
    dropped = (np.nonzero(~keep)[0] + 1).tolist()
    lams = lams[keep]
    w = system.weights[keep]
    Q = np.conj(w)[:, np.newaxis] * w[np.newaxis] * gram_matrix(lams, T0)
    N = np.diag(np.exp(2. * lams * T0)).astype(complex)
    return Q, N, dropped


def smallest_observability_ratio(Q, N):
    """Infimum of ``v* Q v / v* N v`` over nonzero v.

    Computed as the inverse of the largest generalized eigenvalue of (N, Q),
    which keeps the well-scaled form on the Cholesky side; falls back to the
    smallest generalized eigenvalue of (Q, N).

    Returns
    -------
    ratio : float
    direction : ndarray
        Minimizing vector, unit Euclidean norm.

    Raises
    ------
    NumericalBreakdown
        If N has an eigenvalue below 1e-300.
    """
    n_eigs = np.linalg.eigvalsh(N)
    if n_eigs.min() < MIN_EIGENVALUE:
        raise NumericalBreakdown('N has eigenvalue %.3e; drop the deep '
                                 'branches.' % n_eigs.min())
    try:
        theta, vecs = spl.eigh(N, Q)
        ratio = 1. / theta[-1]
        v = vecs[:, -1]
    except (np.linalg.LinAlgError, spl.LinAlgError):
        mu, vecs = spl.eigh(Q, N)
        ratio = mu[0]
        v = vecs[:, 0]
    return float(ratio), v / np.linalg.norm(v)


def rayleigh_quotient(Q, N, v):
    v = np.asarray(v, dtype=complex)
    return float(np.real(np.vdot(v, Q @ v)) / np.real(np.vdot(v, N @ v)))


def observability_report(system, T, T0):
    Q, N, dropped = observation_gram(system, T, T0)
    if Q.shape[0] == 0:
        raise NumericalBreakdown('mode m=%d: every branch underflows for '
                                 'T=%g, T0=%g.' % (system.mode.m, T, T0))
    ratio, v = smallest_observability_ratio(Q, N)
    return ObservabilityReport(m=int(system.mode.m), n_branches=Q.shape[0],
                               smallest_ratio=ratio, direction=v,
                               condition_q=float(np.linalg.cond(Q)),
                               condition_n=float(np.linalg.cond(N)),
                               dropped=dropped)


def truncation_sensitivity(system, n_branches, T, T0, extra=2):
    """Smallest ratios with ``n_branches`` and ``n_branches + extra``
    branches. Nested minimization makes the second one no larger.

    ``extended`` is False when every added branch was dropped as
    underflowing; both problems are then the same and ``nonincreasing``
    carries no information.
    """
    small = observability_report(system.truncate(n_branches), T, T0)
    large = observability_report(system.truncate(n_branches + extra), T, T0)
    change = abs(large.smallest_ratio - small.smallest_ratio) / \
        small.smallest_ratio
    return {'m': small.m,
            'L_effective': small.n_branches,
            'L_effective_extended': large.n_branches,
            'extended': bool(large.n_branches > small.n_branches),
            'ratio': small.smallest_ratio,
            'ratio_extended': large.smallest_ratio,
            'relative_change': float(change),
            'nonincreasing': bool(large.smallest_ratio <=
                                  small.smallest_ratio * (1. + 1e-10))}


def uniformity_scan(systems, n_branches, T, T0):
    """Smallest observability ratios over a set of modes.

    Parameters
    ----------
    systems : dict
        Maps m to its :class:`ModalSystem`.
    n_branches : int
    T, T0 : float

    Returns
    -------
    scan : dict
        ``reports`` sorted by m, ``min_ratio``, ``argmin_m``,
        ``all_positive``, ``symmetric`` (m and -m agree to 1e-12 relative)
        and ``non_degrading`` (the minimum over the upper half of |m| is at
        least half the minimum over the lower half).
    """
    reports = [observability_report(systems[m].truncate(n_branches), T, T0)
               for m in sorted(systems)]
    ratios = {r.m: r.smallest_ratio for r in reports}
    symmetric = all(abs(ratios[m] - ratios[-m]) <= 1e-12 * abs(ratios[m])
                    for m in ratios if -m in ratios)
    abs_m = np.array(sorted({abs(m) for m in ratios}))
    split = abs_m[abs_m.size // 2] if abs_m.size > 1 else abs_m[0]
    low = min(v for m, v in ratios.items() if abs(m) < split) \
        if abs_m.size > 1 else min(ratios.values())
    high = min(v for m, v in ratios.items() if abs(m) >= split)
    argmin = min(ratios, key=lambda m: (ratios[m], abs(m), m))
    return {'reports': reports,
            'min_ratio': float(min(ratios.values())),
            'argmin_m': int(argmin),
            'all_positive': bool(all(v > 0 for v in ratios.values())),
            'symmetric': bool(symmetric),
            'non_degrading': bool(high >= 0.5 * low)}

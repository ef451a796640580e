"""Synthetic initial data for channel experiments."""
import h5py
import numpy as np
from sklearn.utils import check_random_state


def make_modal_data(m_max=8, l_max=20, m_support=4, l_support=6, n_sine=4,
                    scale=1., random_state=None):
    """Make random modal initial data of a real velocity field.

    Coefficients of mode -m are the conjugates of those of mode m, which is
    the modal form of a real field.

    Parameters
    ----------
    m_max : int
        Modes 1 <= |m| <= m_max get a coefficient vector.
    l_max : int
        Length of each coefficient vector.
    m_support : int
        Only |m| <= m_support carry nonzero coefficients.
    l_support : int
        Only branches l <= l_support carry nonzero coefficients.
    n_sine : int
        Number of k = 0 sine coefficients.
    scale : float
        Standard deviation of the real and imaginary parts.
    random_state : int, np.random.RandomState instance, or None
        Random number seed or state.

    Returns
    -------
    alphas : dict
        Maps m to a complex vector of length ``l_max``.
    sine : ndarray, shape (n_sine,)
        Coefficients of (sin(n pi y), 0), n = 1..n_sine.
    """
    rng = check_random_state(random_state)
    alphas = {}
    for m in range(1, m_max + 1):
        a = np.zeros(l_max, dtype=complex)
        if m <= m_support:
            n = min(l_support, l_max)
            a[:n] = scale * (rng.normal(size=n) + 1j * rng.normal(size=n))
        alphas[m] = a
        alphas[-m] = np.conj(a)
    sine = scale * rng.normal(size=n_sine)
    return {m: alphas[m] for m in sorted(alphas)}, sine


def make_eigenfunction_data(m=1, l=1, l_max=20, amplitude=1., sine=None):
    """Modal data of a single real eigenmode pair (m, l) and (-m, l)."""
    if m == 0:
        raise ValueError('m must be nonzero.')
    a = np.zeros(l_max, dtype=complex)
    a[l - 1] = amplitude
    alphas = {abs(m): a, -abs(m): np.conj(a)}
    sine = np.zeros(0) if sine is None else np.asarray(sine, dtype=float)
    return alphas, sine


def make_stream_field(n_x=64, n_y=2 ** 10 + 1, m_support=4, length=2. * np.pi,
                      sine=None, scale=1., random_state=None):
    """Make a gridded divergence-free velocity field.

    The field derives from the stream function
    ``chi = sum_m c_m e^{ikx} y^2 (1-y)^2 + conj``, so that ``u = chi_y``,
    ``v = -chi_x`` vanishes at both walls and u has zero x-mean. A k = 0
    part ``sum_n s_n sin(n pi y)`` can be added to u.

    Returns
    -------
    x : ndarray, shape (n_x,)
    y : ndarray, shape (n_y,)
    u0, v0 : ndarray, shape (n_x, n_y)
    """
    rng = check_random_state(random_state)
    x = np.arange(n_x) * length / n_x
    y = np.linspace(0., 1., n_y)
    p = y ** 2 * (1. - y) ** 2
    dp = 2. * y * (1. - y) * (1. - 2. * y)
    u0 = np.zeros((n_x, n_y))
    v0 = np.zeros((n_x, n_y))
    for m in range(1, m_support + 1):
        c = scale * (rng.normal() + 1j * rng.normal())
        k = 2. * np.pi * m / length
        wave = c * np.exp(1j * k * x)[:, np.newaxis]
        u0 += 2. * np.real(wave * dp[np.newaxis])
        v0 += 2. * np.real(-1j * k * wave * p[np.newaxis])
    if sine is not None:
        for n, s in enumerate(sine, start=1):
            u0 += s * np.sin(n * np.pi * y)[np.newaxis]
    return x, y, u0, v0


def save_initial_data(h5_name, u0, v0, length, u_key='u0', v_key='v0'):
    """Write gridded initial data in the layout read by
    :func:`stokesnc.mpi_utils.load_initial_data_MPI`."""
    with h5py.File(h5_name, 'w') as f:
        f.create_dataset(u_key, data=u0)
        f.create_dataset(v_key, data=v0)
        f.attrs['length'] = float(length)


def load_initial_data(h5_name, u_key='u0', v_key='v0'):
    """Serial counterpart of :func:`load_initial_data_MPI`."""
    with h5py.File(h5_name, 'r') as f:
        return (f[u_key][()].astype(float), f[v_key][()].astype(float),
                float(f.attrs['length']))

import os
import sys
import logging
from multiprocessing import Pool

import numpy as np
from scipy.integrate import simpson


THREADS_ENV = 'STOKES_NC_THREADS'


def check_logger(logger, name='stokesnc', comm=None):
    """Return ``logger`` or, if None, a logger writing to ``sys.stdout``.

    Parameters
    ----------
    logger : Logger or None
        An existing logger. Returned as is when not None.
    name : str
        Name of the logger to create.
    comm : MPI communicator or None
        When running on more than one rank, the rank is appended to the name.

    Returns
    -------
    logger : Logger
    """
    ret = logger
    if ret is None:
        if comm is not None and comm.Get_size() > 1:
            r, s = comm.Get_rank(), comm.Get_size()
            name += " " + str(r).rjust(int(np.log10(s)) + 1)

        ret = logging.getLogger(name=name)
        if not ret.handlers:
            handler = logging.StreamHandler(sys.stdout)
            fmt = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
            handler.setFormatter(logging.Formatter(fmt))
            ret.addHandler(handler)
    return ret


def set_verbosity(logger, verbose):
    """Switch a logger between DEBUG (verbose) and WARNING."""
    if verbose:
        logger.setLevel(logging.DEBUG)
    else:
        logger.setLevel(logging.WARNING)


def uniform_grid(n_points):
    """Uniform grid of ``n_points`` points on [0, 1], endpoints included.

    ``n_points`` must be odd so that composite Simpson quadrature applies.
    """
    n_points = int(n_points)
    if n_points < 5 or n_points % 2 == 0:
        raise ValueError('n_points must be odd and at least 5.')
    return np.linspace(0., 1., n_points)


def simpson_integrate(values, y):
    """Composite Simpson quadrature over the last axis on a uniform grid.

    Parameters
    ----------
    values : ndarray, shape (..., n_points)
        Samples, real or complex.
    y : ndarray, shape (n_points,)
        Uniform grid.

    Returns
    -------
    integral : float, complex or ndarray
    """
    h = y[1] - y[0]
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return (simpson(values.real, dx=h, axis=-1) +
                1j * simpson(values.imag, dx=h, axis=-1))
    return simpson(values, dx=h, axis=-1)


def fd_derivative(values, h, axis=-1):
    """Fourth-order finite-difference first derivative on a uniform grid.

    Centered five-point stencils in the interior, one-sided five-point
    closures at the two points next to each end.

    Parameters
    ----------
    values : ndarray
        Samples along ``axis``; at least five of them.
    h : float
        Grid spacing.
    axis : int
        Axis to differentiate along.

    Returns
    -------
    derivative : ndarray, same shape as ``values``
    """
    f = np.moveaxis(np.asarray(values), axis, -1)
    if f.shape[-1] < 5:
        raise ValueError('At least five samples are needed.')
    d = np.empty(f.shape, dtype=np.result_type(f.dtype, float))
    d[..., 2:-2] = (f[..., :-4] - 8. * f[..., 1:-3] +
                    8. * f[..., 3:-1] - f[..., 4:])
    d[..., 0] = (-25. * f[..., 0] + 48. * f[..., 1] - 36. * f[..., 2] +
                 16. * f[..., 3] - 3. * f[..., 4])
    d[..., 1] = (-3. * f[..., 0] - 10. * f[..., 1] + 18. * f[..., 2] -
                 6. * f[..., 3] + f[..., 4])
    d[..., -2] = (3. * f[..., -1] + 10. * f[..., -2] - 18. * f[..., -3] +
                  6. * f[..., -4] - f[..., -5])
    d[..., -1] = (25. * f[..., -1] - 48. * f[..., -2] + 36. * f[..., -3] -
                  16. * f[..., -4] + 3. * f[..., -5])
    d /= 12. * h
    return np.moveaxis(d, -1, axis)


def check_n_jobs(n_jobs=None):
    """Resolve the number of worker processes.

    ``None`` reads the ``STOKES_NC_THREADS`` environment variable and
    defaults to 1 (serial).
    """
    if n_jobs is None:
        value = os.environ.get(THREADS_ENV, '1')
        try:
            n_jobs = int(value)
        except ValueError:
            raise ValueError('%s must be an integer, got %r.'
                             % (THREADS_ENV, value))
    n_jobs = int(n_jobs)
    if n_jobs < 1:
        raise ValueError('The number of workers must be positive.')
    return n_jobs


def map_modes(func, items, n_jobs=1):
    """Apply ``func`` to every item, optionally in a process pool.

    The output order always matches the input order.
    """
    items = list(items)
    if n_jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with Pool(min(n_jobs, len(items))) as pool:
        return pool.map(func, items)

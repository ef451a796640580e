import pytest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal, assert_raises

from stokesnc.datasets import (load_initial_data, make_eigenfunction_data,
                               make_modal_data, make_stream_field,
                               save_initial_data)
from stokesnc.utils import fd_derivative


@pytest.mark.fast
def test_make_modal_data():
    """Tests the support and conjugate symmetry of random modal data."""
    alphas, sine = make_modal_data(m_max=4, l_max=8, m_support=2,
                                   l_support=3, n_sine=5, random_state=0)
    assert sorted(alphas) == [-4, -3, -2, -1, 1, 2, 3, 4]
    for m in range(1, 5):
        assert_array_equal(alphas[-m], np.conj(alphas[m]))
        assert alphas[m].shape == (8,)
    assert np.all(alphas[1][:3] != 0)
    assert_array_equal(alphas[1][3:], 0.)
    assert_array_equal(alphas[3], 0.)
    assert sine.shape == (5,)
    again, _ = make_modal_data(m_max=4, l_max=8, m_support=2, l_support=3,
                               n_sine=5, random_state=0)
    assert_array_equal(again[2], alphas[2])


@pytest.mark.fast
def test_make_eigenfunction_data():
    """Tests single eigenmode data."""
    alphas, sine = make_eigenfunction_data(-2, 3, l_max=5, amplitude=0.5,
                                           sine=[1.])
    assert sorted(alphas) == [-2, 2]
    assert_array_equal(alphas[2], [0., 0., 0.5, 0., 0.])
    assert_array_equal(sine, [1.])
    assert_raises(ValueError, make_eigenfunction_data, 0, 1)


@pytest.mark.fast
def test_make_stream_field():
    """Tests whether the stream field is divergence free, has no normal
    velocity at the walls and zero x-mean unless sines are added."""
    length = 4.
    x, y, u0, v0 = make_stream_field(n_x=16, n_y=65, m_support=3,
                                     length=length, random_state=2)
    assert u0.shape == v0.shape == (16, 65)
    assert_allclose(v0[:, [0, -1]], 0., atol=1e-15)
    assert_allclose(u0.mean(axis=0), 0., atol=1e-13)
    U = np.fft.fft(u0, axis=0) / 16
    V = np.fft.fft(v0, axis=0) / 16
    for m in [1, 2, 3]:
        k = 2. * np.pi * m / length
        div = 1j * k * U[m] + fd_derivative(V[m], y[1] - y[0])
        assert np.abs(div).max() <= 1e-12 * k * np.abs(U[m]).max()
    _, _, u_sine, _ = make_stream_field(n_x=16, n_y=65, m_support=3,
                                        length=length, sine=[2.],
                                        random_state=2)
    assert_allclose(u_sine.mean(axis=0), 2. * np.sin(np.pi * y),
                    atol=1e-12)


@pytest.mark.fast
def test_save_and_load_initial_data(tmpdir):
    """Tests the HDF5 layout of gridded initial data."""
    _, _, u0, v0 = make_stream_field(n_x=8, n_y=17, m_support=2,
                                     random_state=0)
    fname = str(tmpdir.join('initial.h5'))
    save_initial_data(fname, u0, v0, 2. * np.pi)
    u, v, length = load_initial_data(fname)
    assert_array_equal(u, u0)
    assert_array_equal(v, v0)
    assert length == 2. * np.pi

import pytest
import numpy as np

from numpy.testing import assert_array_equal
try:
    from mpi4py import MPI
except ImportError:
    MPI = None

from stokesnc.spectral import ChannelSpectrum


@pytest.mark.skipif(MPI is None, reason='MPI not installed.')
def test_spectrum_mpi_matches_serial():
    """Tests whether distributing modes across ranks gives the serial
    spectrum on every rank."""
    comm = MPI.COMM_WORLD
    distributed = ChannelSpectrum(m_max=5, l_max=6, comm=comm).fit()
    serial = ChannelSpectrum(m_max=5, l_max=6, n_jobs=1).fit()
    assert_array_equal(distributed.spectrum_table().values,
                       serial.spectrum_table().values)
    assert distributed.k0_ == serial.k0_
    assert distributed.gap_report_['passed']


@pytest.mark.skipif(MPI is None, reason='MPI not installed.')
def test_spectrum_mpi_more_ranks_than_modes():
    """Tests a distributed fit with fewer modes than ranks."""
    comm = MPI.COMM_WORLD
    spectrum = ChannelSpectrum(m_max=1, l_max=4, comm=comm).fit()
    assert sorted(spectrum.roots_) == [-1, 1]
    assert np.all(np.diff(spectrum.eigenvalues(1)) < 0)

import logging

import pytest

import numpy as np
from numpy.testing import (assert_allclose, assert_array_equal,
                           assert_equal, assert_raises)

from stokesnc.config import LocalizationParams
from stokesnc.exceptions import BracketingFailure, ConfigurationError
from stokesnc.spectral import (ChannelSpectrum, ModeIndex, bracket_roots,
                               char_eq, compute_mode_roots, detect_k0,
                               determinant_residual, gap_and_summability,
                               localization_report, rearranged_f,
                               rearranged_f_prime, refine_root,
                               zero_mode_eigenvalue)
from stokesnc.spectral.roots import window_counts
from stokesnc.utils import check_logger


def _bisect(func, a, b, tol=1e-13):
    fa = func(a)
    while b - a > tol:
        c = 0.5 * (a + b)
        fc = func(c)
        if np.signbit(fc) == np.signbit(fa):
            a, fa = c, fc
        else:
            b = c
    return 0.5 * (a + b)


@pytest.mark.fast
def test_char_eq_closed_forms():
    """Tests whether char_eq vanishes at zero and matches the closed form
    at mu_tilde = pi."""
    assert_allclose(char_eq(0., 1.), 0., atol=1e-15)
    assert_allclose(char_eq(np.pi, 1.), -2. * np.pi * (1. + np.cosh(1.)),
                    rtol=1e-12)


@pytest.mark.fast
def test_char_eq_scaled_and_symmetry():
    """Tests whether the scaled form is F / cosh k and whether F is odd in
    k."""
    mu = np.linspace(0.5, 20., 41)
    for k in [0.3, 1., 4.]:
        assert_allclose(char_eq(mu, k, scaled=True),
                        char_eq(mu, k) / np.cosh(k), rtol=1e-10, atol=1e-12)
        assert_allclose(char_eq(mu, -k), -char_eq(mu, k), rtol=1e-12)
    # the scaled form stays finite where cosh overflows
    assert np.all(np.isfinite(char_eq(mu, 800., scaled=True)))
    assert_raises(ValueError, char_eq, 1., 0.)


@pytest.mark.fast
def test_rearranged_f_values():
    """Tests f(l pi) = sech k - (-1)^l, evenness in k and the relation to
    F."""
    for k in [0.5, 1., 10.]:
        for l in range(1, 6):
            assert_allclose(rearranged_f(l * np.pi, k),
                            1. / np.cosh(k) - (-1.) ** l, atol=1e-12)
    mu = np.linspace(0.3, 15., 31)
    assert_array_equal(rearranged_f(mu, 2.), rearranged_f(mu, -2.))
    k = 1.3
    assert_allclose(rearranged_f(mu, k),
                    -char_eq(mu, k) / (2. * k * mu * np.cosh(k)),
                    rtol=1e-10, atol=1e-13)
    assert_raises(ValueError, rearranged_f, 0., 1.)
    assert_raises(ValueError, rearranged_f, 1., 0.)


@pytest.mark.fast
def test_rearranged_f_prime_matches_difference_quotient():
    """Tests the analytic derivative of rearranged_f against central
    differences."""
    mu = np.linspace(1., 12., 23)
    h = 1e-6
    for k in [0.7, 5.]:
        fd = (rearranged_f(mu + h, k) - rearranged_f(mu - h, k)) / (2. * h)
        assert_allclose(rearranged_f_prime(mu, k), fd, rtol=1e-6, atol=1e-7)


@pytest.mark.fast
def test_sign_change_per_window_large_k():
    """Tests whether f changes sign across every (l pi, (l+1) pi) for
    k = 10."""
    l = np.arange(1, 21)
    lo = rearranged_f(l * np.pi, 10.)
    hi = rearranged_f((l + 1) * np.pi, 10.)
    assert np.all(np.sign(lo) != np.sign(hi))


@pytest.mark.fast
def test_bracket_roots_large_k():
    """Tests whether the brackets for k >= k0 are the windows
    (l pi, (l+1) pi)."""
    params = LocalizationParams(k0=5., l_max=5)
    brackets = bracket_roots(ModeIndex(1, 10.), params)
    assert_allclose(brackets, [(l * np.pi, (l + 1) * np.pi)
                               for l in range(1, 6)])
    assert all(lo >= np.pi for lo, _ in brackets)


@pytest.mark.fast
def test_bracket_roots_small_k_scan():
    """Tests whether the small-k scan finds l_max brackets whose midpoints
    approach l pi."""
    params = LocalizationParams(l_max=10)
    brackets = bracket_roots(ModeIndex(1, 1.), params)
    assert_equal(len(brackets), 10)
    mids = np.array([0.5 * (lo + hi) for lo, hi in brackets])
    assert np.all(np.diff(mids) > 0)
    offsets = np.abs(mids - np.pi * np.rint(mids / np.pi))
    assert offsets[-1] < offsets[0]


@pytest.mark.fast
def test_bracket_roots_failure():
    """Tests whether an under-resolved large-k request raises
    BracketingFailure."""
    # window endpoint values of order one never clear delta = 10
    params = LocalizationParams(k0=1e-3, l_max=5, delta=10.)
    assert_raises(BracketingFailure, bracket_roots, ModeIndex(1, 0.5),
                  params)


@pytest.mark.fast
def test_window_counts():
    """Tests the per-window root counts."""
    mu = np.array([np.pi + 0.1, 2 * np.pi - 0.2, 2 * np.pi + 0.1, 4.5])
    assert_array_equal(window_counts(mu, 3), [1, 2, 0])


@pytest.mark.fast
def test_refine_root_matches_bisection():
    """Tests whether refine_root agrees with a plain bisection of F for
    k = 1."""
    mode = ModeIndex(1, 1.)
    brackets = bracket_roots(mode, LocalizationParams(l_max=3))
    root = refine_root(brackets[0], mode, l=1)
    ref = _bisect(lambda x: char_eq(x, 1.), brackets[0][0], brackets[0][1])
    assert_allclose(root.mu_tilde, ref, atol=1e-10)
    assert_allclose(root.mu_tilde, 6.136, atol=1e-3)
    assert abs(root.char_residual) <= 1e-10
    assert root.bracket_width <= 1e-12
    assert root.lam < -mode.k ** 2


@pytest.mark.fast
def test_refine_root_large_k():
    """Tests refinement in the first window for k = 10."""
    mode = ModeIndex(1, 10.)
    root = refine_root((np.pi, 2. * np.pi), mode, l=1, nu=0.5)
    assert np.pi < root.mu_tilde < 2. * np.pi
    assert abs(root.char_residual) <= 1e-10
    assert_allclose(root.lam, -0.5 * (100. + root.mu_tilde ** 2))
    assert_raises(ValueError, refine_root, (1., 1.5), mode)


@pytest.mark.fast
def test_determinant_residual():
    """Tests the determinant residual at a root, away from roots and against
    the closed-form identity."""
    mode = ModeIndex(1, 10.)
    root = refine_root((np.pi, 2. * np.pi), mode)
    assert root.det_residual <= 1e-8
    assert determinant_residual(mode, 1.5 * np.pi) > 1e-3
    mu = np.linspace(np.pi + 0.05, 6. * np.pi - 0.05, 60)
    for k in [1., -2., 10.]:
        mode = ModeIndex(1 if k > 0 else -1, k)
        det = np.array([determinant_residual(mode, x) for x in mu])
        expected = (np.abs(char_eq(mu, k, scaled=True)) /
                    ((1. + k ** 2) * (1. + mu ** 2)))
        assert_allclose(det, expected, rtol=1e-8, atol=1e-14)


@pytest.mark.fast
def test_zero_mode_eigenvalue():
    """Tests the k = 0 eigenvalues."""
    assert_allclose(zero_mode_eigenvalue(1), -np.pi ** 2)
    assert_allclose(zero_mode_eigenvalue(3, nu=0.5), -4.5 * np.pi ** 2)
    assert_raises(ValueError, zero_mode_eigenvalue, 0)
    assert_raises(ValueError, zero_mode_eigenvalue, 1.5)


@pytest.mark.fast
def test_compute_mode_roots_symmetry():
    """Tests whether modes m and -m give bitwise identical roots."""
    params = LocalizationParams(l_max=8)
    plus = compute_mode_roots(ModeIndex.from_m(2), params=params)
    minus = compute_mode_roots(ModeIndex.from_m(-2), params=params)
    assert_array_equal([r.mu_tilde for r in plus],
                       [r.mu_tilde for r in minus])
    assert_array_equal([r.lam for r in plus], [r.lam for r in minus])


@pytest.mark.fast
def test_localization_report_large_k():
    """Tests the localization facts of a large-k mode."""
    params = LocalizationParams(k0=20., l_max=10)
    roots = compute_mode_roots(ModeIndex(1, 25.), params=params)
    report = localization_report(roots, params)
    assert report['large_k']
    assert report['in_intervals']
    assert report['none_below_pi']
    assert report['residuals_ok']
    assert report['ordered']
    assert report['simplicity_margin'] > 0


@pytest.mark.fast
def test_gap_and_summability():
    """Tests the gap, summability and lower-bound checks over modes
    |m| <= 8."""
    params = LocalizationParams(l_max=30)
    roots = []
    for m in range(1, 9):
        roots += compute_mode_roots(ModeIndex.from_m(m), params=params)
    report = gap_and_summability(roots)
    assert report['min_gap'] > 0
    assert report['summable']
    assert report['lower_bound']
    assert report['passed']
    assert_raises(ValueError, gap_and_summability, [])


@pytest.mark.fast
def test_detect_k0():
    """Tests whether k0 detection skips a small |k| with a short root gap
    and falls back when nothing qualifies."""
    params = LocalizationParams(l_max=10)
    assert_allclose(detect_k0([1., 10., 20.], params), 10.)
    assert_allclose(detect_k0([0.5, 1.], params), params.k0)


@pytest.mark.fast
def test_root_messages_use_the_given_logger(caplog):
    """Tests whether root computations log only through the logger they
    are handed."""
    logger = check_logger(None, name='test_root_messages')
    logger.setLevel(logging.DEBUG)
    params = LocalizationParams(l_max=10)
    with caplog.at_level(logging.DEBUG, logger='test_root_messages'):
        compute_mode_roots(ModeIndex.from_m(1), params=params, logger=logger)
        detect_k0([0.5, 1.], params, logger=logger)
    messages = [r.getMessage() for r in caplog.records
                if r.name == 'test_root_messages']
    assert 'mode m=1: 10 roots certified' in messages
    assert any(msg.startswith('no k0 detected') for msg in messages)
    caplog.clear()
    with caplog.at_level(logging.DEBUG):
        compute_mode_roots(ModeIndex.from_m(1), params=params)
        detect_k0([0.5, 1.], params)
    assert caplog.records == []


@pytest.mark.fast
def test_channel_spectrum_fit():
    """Tests the spectrum estimator on a small truncation."""
    spectrum = ChannelSpectrum(m_max=4, l_max=10).fit()
    table = spectrum.spectrum_table()
    assert_equal(table.shape[0], 80)
    assert_array_equal(spectrum.modes_, [-4, -3, -2, -1, 1, 2, 3, 4])
    for m in range(1, 5):
        assert_array_equal(spectrum.eigenvalues(m), spectrum.eigenvalues(-m))
        assert np.all(np.diff(spectrum.eigenvalues(m)) < 0)
    assert spectrum.gap_report_['passed']
    assert all(rep['residuals_ok'] for rep in spectrum.localization_.values())
    assert np.all(np.abs(table['char_residual']) <= 1e-10)


@pytest.mark.fast
def test_channel_spectrum_process_pool():
    """Tests whether a worker pool gives the same spectrum as a serial
    fit."""
    serial = ChannelSpectrum(m_max=3, l_max=6, n_jobs=1).fit()
    pooled = ChannelSpectrum(m_max=3, l_max=6, n_jobs=2).fit()
    assert_array_equal(serial.spectrum_table().values,
                       pooled.spectrum_table().values)


@pytest.mark.fast
def test_channel_spectrum_bad_input():
    """Tests the validation of the spectrum estimator."""
    assert_raises(ValueError, ChannelSpectrum(nu=0.).fit)
    assert_raises(ValueError, ChannelSpectrum(m_max=2).fit, [0, 1])
    assert_raises(ConfigurationError, LocalizationParams, scan_resolution=1.)

import pytest

import numpy as np
from numpy.testing import assert_allclose, assert_equal, assert_raises

from stokesnc.config import LocalizationParams
from stokesnc.control import (ModalState, ModalSystem, sine_mode_invariant,
                              time_grid)
from stokesnc.exceptions import StepTooLarge
from stokesnc.spectral import (ModeIndex, compute_mode_roots,
                               modal_eigenfunction)
from stokesnc.utils import simpson_integrate, uniform_grid


def _system(n=4, nu=1.):
    mode = ModeIndex(1, 1.)
    lams = -nu * (1. + (np.pi * (np.arange(1, n + 1) + 0.5)) ** 2)
    traces = (1. + np.arange(n)) * (2. - 1j)
    return ModalSystem(mode, lams, traces, nu=nu)


@pytest.mark.fast
def test_time_grid():
    """Tests the uniform time grid."""
    t = time_grid(2., 8)
    assert_equal(t.size, 9)
    assert_allclose(t[[0, -1]], [0., 2.])


@pytest.mark.fast
def test_modal_state_validation():
    """Tests the ModalState checks."""
    assert_raises(ValueError, ModalState, None, np.ones((2, 2)))
    assert_raises(ValueError, ModalState, None, [1., np.nan])
    assert_allclose(ModalState(None, [3., 4j]).norm, 5.)


@pytest.mark.fast
def test_from_eigenfunctions():
    """Tests whether systems built from eigenfunctions of m and -m share
    eigenvalues and weights."""
    params = LocalizationParams(l_max=3)
    systems = []
    for m in [2, -2]:
        roots = compute_mode_roots(ModeIndex.from_m(m), params=params)
        eigs = [modal_eigenfunction(r, n_points=257) for r in roots]
        systems.append(ModalSystem.from_eigenfunctions(eigs[::-1]))
    plus, minus = systems
    assert_equal(plus.n_branches, 3)
    assert np.all(np.diff(plus.lams) < 0)
    assert_allclose(plus.weights, minus.weights, rtol=1e-12)
    assert_allclose(plus.input_coeffs, np.conj(plus.weights))
    assert_equal(plus.truncate(2).n_branches, 2)


@pytest.mark.fast
def test_adjoint_evolve():
    """Tests terminal identity, single-branch decay and the semigroup
    property of the adjoint evolution."""
    system = _system()
    T = 1.
    alpha = ModalState(system.mode, [1., 2j, -1., 0.5])
    assert_allclose(system.adjoint_evolve(alpha, T, T).alphas, alpha.alphas)
    e1 = ModalState(system.mode, [1., 0., 0., 0.])
    assert_allclose(system.adjoint_evolve(e1, 0., T).alphas[0],
                    np.exp(system.lams[0] * T))
    half = system.adjoint_evolve(alpha, 0.6, T)
    composed = system.adjoint_evolve(ModalState(system.mode, half.alphas),
                                     0.2, 0.6)
    direct = system.adjoint_evolve(alpha, 0., T)
    assert_allclose(composed.alphas, direct.alphas, rtol=1e-12)
    norms = [system.adjoint_evolve(alpha, t, T).norm
             for t in np.linspace(T, 0., 6)]
    assert np.all(np.diff(norms) <= 0)
    assert_raises(ValueError, system.adjoint_evolve, alpha, 1.5, T)


@pytest.mark.fast
def test_adjoint_pressure_trace():
    """Tests the boundary pressure trace for one, two and zero branches."""
    system = _system(n=2, nu=0.5)
    T = 1.
    t = np.linspace(0., T, 11)
    e1 = ModalState(system.mode, [1., 0.])
    q = system.adjoint_pressure_trace(e1, t, T)
    expected = (0.5 / system.mode.k ** 2 * abs(system.traces[0]) *
                np.exp(system.lams[0] * (T - t)))
    assert_allclose(np.abs(q), expected, rtol=1e-12)
    alpha = ModalState(system.mode, [0.3 - 1j, 2.])
    q = system.adjoint_pressure_trace(alpha, t, T)
    w = system.weights
    direct = (alpha.alphas[0] * w[0] * np.exp(system.lams[0] * (T - t)) +
              alpha.alphas[1] * w[1] * np.exp(system.lams[1] * (T - t)))
    assert_allclose(q, direct, rtol=1e-12)
    zero = ModalState(system.mode, [0., 0.])
    assert_allclose(system.adjoint_pressure_trace(zero, t, T), 0.)


@pytest.mark.fast
def test_forward_uncontrolled():
    """Tests free decay a(T) = e^{lambda T} a(0)."""
    system = _system()
    a0 = ModalState(system.mode, [1., -2., 1j, 0.5])
    traj = system.forward_controlled(a0, None, time_grid(1., 200))
    assert_allclose(traj.final.alphas, np.exp(system.lams) * a0.alphas,
                    rtol=1e-10)
    assert_equal(traj.alphas.shape, (201, 4))


@pytest.mark.fast
def test_forward_constant_control():
    """Tests the closed form of a constant control."""
    system = _system(n=1)
    a0 = ModalState(system.mode, [0.7])
    t = time_grid(1., 50)
    psi = np.full(t.size - 1, 0.3 + 0.2j)
    traj = system.forward_controlled(a0, psi, t)
    lam, b = system.lams[0], system.input_coeffs[0]
    expected = (np.exp(lam) * 0.7 +
                b * (0.3 + 0.2j) * (np.exp(lam) - 1.) / lam)
    assert_allclose(traj.final.alphas[0], expected, rtol=1e-10)
    assert_raises(ValueError, system.forward_controlled, a0, psi[:-1], t)
    assert_raises(ValueError, system.forward_controlled, a0, psi,
                  t[::-1])


@pytest.mark.fast
def test_duality_identity():
    """Tests <a(T), alpha> - <a(0), alpha e^{lambda T}> = int psi conj(q)
    for random data."""
    rng = np.random.RandomState(3)
    system = _system(n=5, nu=0.3)
    t = time_grid(1., 300)
    for _ in range(10):
        alpha = ModalState(system.mode, rng.randn(5) + 1j * rng.randn(5))
        a0 = ModalState(system.mode, rng.randn(5) + 1j * rng.randn(5))
        psi = rng.randn(300) + 1j * rng.randn(300)
        lhs, rhs = system.duality_gap(a0, alpha, psi, t, 1.)
        assert_allclose(lhs, rhs, rtol=1e-10)


@pytest.mark.fast
def test_step_too_large():
    """Tests whether a coarse grid for a fast branch is rejected."""
    system = ModalSystem(ModeIndex(1, 1.), [-1e4], [1.])
    a0 = ModalState(system.mode, [1.])
    assert_raises(StepTooLarge, system.forward_controlled, a0, None,
                  time_grid(1., 10))


@pytest.mark.fast
def test_tail_norm():
    """Tests the free-decay size of the branches beyond the synthesis
    truncation."""
    system = _system()
    a0 = ModalState(system.mode, [1., 1., 2., -3.])
    expected = 2. * np.exp(system.lams[2]) + 3. * np.exp(system.lams[3])
    assert_allclose(system.tail_norm(a0, 1., 2), expected)


@pytest.mark.fast
def test_sine_mode_invariant():
    """Tests the exact decay of the k = 0 sine directions."""
    y = uniform_grid(513)
    u = np.sin(np.pi * y) + 0.3 * np.sin(2. * np.pi * y)
    v0 = sine_mode_invariant(1, u, 0.)
    assert_allclose(v0, np.pi * 1., rtol=1e-8)
    assert_allclose(sine_mode_invariant(1, u, 1.), v0 * np.exp(-np.pi ** 2))
    assert_allclose(sine_mode_invariant(2, u, 0.5, nu=2.),
                    sine_mode_invariant(2, u, 0.) *
                    np.exp(-2. * 4. * np.pi ** 2 * 0.5))
    assert_allclose(simpson_integrate(u * np.sin(np.pi * y), y), 0.5,
                    rtol=1e-8)
    assert_raises(ValueError, sine_mode_invariant, 0, u, 1.)

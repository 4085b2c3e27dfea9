import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compton_povm.polarization import (
    KET_A,
    KET_H,
    BlochAngles,
    bloch_state,
    density_to_stokes,
    hermitize,
    is_physical_stokes,
    projector,
    stokes_to_density,
)


def test_basis_examples():
    np.testing.assert_allclose(density_to_stokes(np.diag([1.0, 0.0])), [1, 0, 0, 1])
    np.testing.assert_allclose(density_to_stokes(0.5 * np.ones((2, 2))), [1, 1, 0, 0])
    np.testing.assert_allclose(density_to_stokes(0.5 * np.eye(2)), [1, 0, 0, 0])


def test_inverse_examples():
    np.testing.assert_allclose(stokes_to_density([1, 0, 0, -1]), np.diag([0, 1]))
    np.testing.assert_allclose(stokes_to_density([1, 0, 1, 0]), 0.5 * np.array([[1, -1j], [1j, 1]]))
    np.testing.assert_allclose(stokes_to_density([2, 0, 0, 0]), np.eye(2))
    np.testing.assert_allclose(stokes_to_density([1, 0, 1, 0]), projector(KET_A), atol=1e-15)


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        density_to_stokes(np.array([[1.0, 1.0], [0.0, 0.0]]))


def test_small_drift_symmetrized():
    m = np.array([[0.5, 0.2 + 1e-12], [0.2, 0.5]])
    out = hermitize(m)
    np.testing.assert_array_equal(out, out.conj().T)


def test_round_trip_random(rng):
    for _ in range(1000):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = a + a.conj().T
        np.testing.assert_allclose(stokes_to_density(density_to_stokes(rho)), rho, atol=1e-14)
        s = rng.normal(size=4)
        np.testing.assert_allclose(density_to_stokes(stokes_to_density(s)), s, atol=1e-14)


def test_trace_is_s0(rng):
    s = rng.normal(size=4)
    assert np.trace(stokes_to_density(s)).real == pytest.approx(s[0], abs=1e-15)


def test_bloch_examples():
    np.testing.assert_allclose(bloch_state(BlochAngles(0.0, 1.234)), np.diag([1, 0]), atol=1e-15)
    h = bloch_state(BlochAngles(np.pi / 2, 0.0))
    np.testing.assert_allclose(h, projector(KET_H), atol=1e-15)
    np.testing.assert_allclose(density_to_stokes(h), [1, 1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(density_to_stokes(bloch_state(BlochAngles(np.pi / 2, np.pi / 4))),
                               [1, 0, 1, 0], atol=1e-15)


def test_bloch_range_and_reduction():
    with pytest.raises(ValueError):
        BlochAngles(-0.1, 0.0)
    with pytest.raises(ValueError):
        BlochAngles(np.pi + 0.1, 0.0)
    assert BlochAngles(1.0, np.pi + 0.3).phi == pytest.approx(0.3)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, np.pi), st.floats(-10.0, 10.0))
def test_bloch_is_pure_projector(theta, phi):
    rho = bloch_state(BlochAngles(theta, phi))
    np.testing.assert_allclose(rho @ rho, rho, atol=1e-12)
    s = density_to_stokes(rho)
    assert s[1] ** 2 + s[2] ** 2 + s[3] ** 2 == pytest.approx(s[0] ** 2, abs=1e-12)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(-10.0, 10.0))
def test_equator_is_linear(phi):
    assert abs(density_to_stokes(bloch_state(BlochAngles(np.pi / 2, phi)))[3]) < 1e-14


def test_orthogonal_partner():
    a = BlochAngles(0.7, 0.4)
    assert abs(np.vdot(a.ket, a.orthogonal_ket())) < 1e-15


def test_physicality():
    assert is_physical_stokes([1, 0.6, 0.8, 0])
    assert not is_physical_stokes([1, 1, 1, 0])
    assert is_physical_stokes([2, 1, 1, 1])

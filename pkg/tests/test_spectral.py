import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conelab.spectral import ChebyshevAxis, FourierAxis, PolarAxis


def test_chebyshev_quadrature_exact_for_polynomials():
    ax = ChebyshevAxis(20, -0.3, 1.1)
    x = ax.nodes
    for p in range(19):
        exact = (1.1 ** (p + 1) - (-0.3) ** (p + 1)) / (p + 1)
        assert ax.weights @ x ** p == pytest.approx(exact, rel=1e-13, abs=1e-14)


def test_chebyshev_weights_positive():
    assert np.all(ChebyshevAxis(77, 0, 1).weights > 0)


@pytest.mark.parametrize("n", [32, 128, 256])
def test_second_derivative_does_not_degrade_with_n(n):
    ax = ChebyshevAxis(n, 0.0, 2.0)
    x = ax.nodes
    f = np.exp(np.sin(x))
    d2 = ax.derivative(f, order=2)
    ref = (np.cos(x) ** 2 - np.sin(x)) * f
    assert np.abs(d2 - ref).max() < 1e-9


def test_end_values_and_derivatives():
    ax = ChebyshevAxis(40, -1.0, 0.5)
    f = np.cos(3 * ax.nodes)
    assert ax.end_values(f, -1) == pytest.approx(np.cos(-3.0), abs=1e-13)
    assert ax.end_values(f, 1) == pytest.approx(np.cos(1.5), abs=1e-13)
    assert ax.end_derivative(f, 1) == pytest.approx(-3 * np.sin(1.5), abs=1e-11)


def test_chebyshev_interpolate():
    ax = ChebyshevAxis(30, 0, 1)
    x = np.array([0.0, 0.123, 1.0])
    np.testing.assert_allclose(ax.interpolate(np.sin(ax.nodes), x), np.sin(x), atol=1e-14)


def test_fourier_forces_odd_and_differentiates():
    ax = FourierAxis(64)
    assert ax.n == 65
    t = ax.nodes
    f = np.exp(np.cos(t))
    np.testing.assert_allclose(ax.derivative(f), -np.sin(t) * f, atol=1e-12)
    np.testing.assert_allclose(ax.derivative(f, order=2), (np.sin(t) ** 2 - np.cos(t)) * f, atol=1e-11)
    assert ax.weights.sum() == pytest.approx(2 * np.pi)


def test_diff_matrix_matches_derivative():
    ax = ChebyshevAxis(12, 0, 3)
    f = ax.nodes ** 3
    np.testing.assert_allclose(ax.diff_matrix() @ f, 3 * ax.nodes ** 2, atol=1e-11)


def _sphere_field(T, P):
    return np.cos(T) + np.sin(T) * np.cos(P) + 0.3 * np.sin(T) ** 2 * np.sin(2 * P)


def test_polar_axis_derivatives_across_pole():
    pol, az = PolarAxis(40, 1.0), FourierAxis(41)
    T, P = np.meshgrid(pol.nodes, az.nodes, indexing="ij")
    f = _sphere_field(T, P)
    dT = -np.sin(T) + np.cos(T) * np.cos(P) + 0.6 * np.sin(T) * np.cos(T) * np.sin(2 * P)
    np.testing.assert_allclose(pol.derivative(f, 0), dT, atol=1e-11)
    assert pol.nodes[0] > 0.01  # first ring stays away from the pole


def test_polar_quadrature_integrates_surface_integrands():
    # area of a spherical cap of aperture 1.0 and the integral of z over it
    pol, az = PolarAxis(24, 1.0), FourierAxis(25)
    T, P = np.meshgrid(pol.nodes, az.nodes, indexing="ij")
    W = np.outer(pol.weights, az.weights)
    assert (W * np.sin(T)).sum() == pytest.approx(2 * np.pi * (1 - np.cos(1.0)), rel=1e-14)
    assert (W * np.sin(T) * np.cos(T)).sum() == pytest.approx(np.pi * np.sin(1.0) ** 2, rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 3.0), st.integers(8, 60))
def test_fejer_integrates_exponentials(b, n):
    ax = ChebyshevAxis(n + 20, 0.0, b)
    assert ax.weights @ np.exp(ax.nodes) == pytest.approx(np.expm1(b), rel=1e-12)

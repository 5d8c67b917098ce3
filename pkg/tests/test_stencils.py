import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sasakigraph.stencils import FIRST, OFFSETS, SECOND, circulant, periodic_diff, pole_crossing, solve_periodic_banded


def test_weights_are_consistent():
    assert FIRST.sum() == pytest.approx(0.0, abs=1e-15)
    assert SECOND.sum() == pytest.approx(0.0, abs=1e-15)
    assert np.dot(FIRST, OFFSETS) == pytest.approx(1.0)
    assert np.dot(SECOND, OFFSETS**2) == pytest.approx(2.0)


@pytest.mark.parametrize("order", [1, 2])
def test_circulant_matches_roll(order, rng):
    n = 32
    h = 2 * np.pi / n
    f = rng.normal(size=n)
    np.testing.assert_allclose(circulant(n, h, order) @ f, periodic_diff(f, h, order=order), atol=1e-12)


def test_fourth_order_convergence():
    errs = []
    for n in (32, 64, 128):
        x = 2 * np.pi * np.arange(n) / n
        h = 2 * np.pi / n
        f = np.exp(np.sin(x))
        exact = np.cos(x) * f
        errs.append(np.max(np.abs(periodic_diff(f, h) - exact)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.8)


def test_pole_crossing_derivative_of_smooth_function():
    n_phi, n_psi = 32, 64
    h = np.pi / n_phi
    phi = (np.arange(n_phi) + 0.5) * h
    psi = 2 * np.pi * np.arange(n_psi) / n_psi
    P, S = np.meshgrid(phi, psi, indexing="ij")
    # z-coordinate and x-coordinate of the unit sphere are smooth across poles
    for f, df in ((np.cos(P), -np.sin(P)), (np.sin(P) * np.cos(S), np.cos(P) * np.cos(S))):
        d = (pole_crossing(n_phi, n_psi, h) @ f.ravel()).reshape(f.shape)
        assert np.max(np.abs(d - df)) < 1e-4


def test_pole_crossing_rejects_odd_longitudes():
    with pytest.raises(ValueError):
        pole_crossing(8, 15, 0.1)


def _dense(diags):
    width, n = diags.shape
    p = (width - 1) // 2
    A = np.zeros((n, n))
    for k in range(n):
        for o in range(width):
            A[k, (k + o - p) % n] += diags[o, k]
    return A


@settings(max_examples=30, deadline=None)
@given(n=st.integers(8, 40), seed=st.integers(0, 10_000))
def test_banded_solver_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    diags = rng.normal(size=(5, n))
    diags[2] += 6.0  # keep the system well conditioned
    b = rng.normal(size=n)
    x = solve_periodic_banded(diags, b)
    np.testing.assert_allclose(_dense(diags) @ x, b, atol=1e-10)


def test_banded_solver_too_small():
    with pytest.raises(ValueError):
        solve_periodic_banded(np.ones((5, 4)), np.ones(4))

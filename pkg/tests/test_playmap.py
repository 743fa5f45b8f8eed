import numpy as np
import pytest
from hypothesis import given, strategies as st

from aloha_diffusion import DomainError, SigmoidParams, f, g, g_inverse, g_prime

P = SigmoidParams(gamma=0.4, delta=1.125, w=1.0)


def test_center_and_saturation():
    assert g(0.0, P) == pytest.approx(P.gamma * P.delta, abs=0)
    assert abs(g(50 * P.w, P) - P.upper) <= 1e-12
    assert abs(g(-50 * P.w, P) - P.lower) <= 1e-12


def test_reference_range_parameters():
    # endpoints 0.05 and 0.85 give gamma = 0.4, delta = 1.125, centre 0.45
    s = SigmoidParams.from_range(0.05, 0.85)
    assert s.gamma == pytest.approx(0.4)
    assert s.delta == pytest.approx(1.125)
    assert g(0.0, s) == pytest.approx(0.45)


@pytest.mark.parametrize(
    "gamma,delta,w",
    [(0.4, 0.9, 1.0), (0.4, 2.0, 1.0), (0.5, 1.125, 1.0), (0.0, 1.0, 1.0), (0.4, 1.1, 0.0)],
)
def test_invalid_parameters(gamma, delta, w):
    with pytest.raises(ValueError):
        SigmoidParams(gamma, delta, w)


def test_delta_one_reaches_zero():
    s = SigmoidParams(0.45, 1.0)
    assert s.lower == 0.0 and s.upper == pytest.approx(0.9)


def test_inverse_center():
    assert g_inverse(P.center, P) == pytest.approx(0.0, abs=1e-15)


def test_round_trip():
    rng = np.random.default_rng(3)
    v = rng.uniform(P.lower, P.upper, 1000)
    assert np.max(np.abs(g(g_inverse(v, P), P) - v)) <= 1e-10


@pytest.mark.parametrize("v", [0.85 - 1e-15, 0.05 + 1e-15, 0.85, 0.05, 0.9, 0.0, np.nan])
def test_inverse_rejects_boundary(v):
    with pytest.raises(DomainError):
        g_inverse(v, P)


def test_f_center():
    assert f(P.center, P) == pytest.approx(P.gamma / P.w)


def test_f_rejects_boundary():
    with pytest.raises(DomainError):
        f(P.upper - 1e-16, P)


def test_f_matches_finite_difference_slope():
    rng = np.random.default_rng(4)
    v = rng.uniform(P.lower + 1e-3, P.upper - 1e-3, 100)
    u = g_inverse(v, P)
    h = 1e-6
    fd = (g(u + h, P) - g(u - h, P)) / (2 * h)
    assert np.max(np.abs(fd / f(v, P) - 1)) <= 1e-6


def test_f_matches_analytic_slope():
    u = np.linspace(-6, 6, 201)
    v = g(u, P)
    assert np.allclose(f(v, P), g_prime(u, P), rtol=0, atol=1e-12)


@given(st.floats(-8, 8), st.floats(-8, 8))
def test_monotone(u1, u2):
    if u1 < u2 and u2 - u1 > 1e-9:
        assert g(u1, P) < g(u2, P)


@given(st.floats(-8, 8), st.floats(0.3, 3.0))
def test_range_strict(u, w):
    s = SigmoidParams(0.45, 1.0, w)
    v = g(u * w, s)
    assert s.lower < v < s.upper

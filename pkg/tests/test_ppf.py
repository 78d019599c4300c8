import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ppslam.errors import ConfigInvalid, EnvelopeViolation
from ppslam.ppf import (PerformanceEnvelope, check_initial_error, envelope_at, envelope_from_initial_error,
                        envelope_rate, eta, inverse_transform, lambda_mu, smooth_transform)


def sym(delta, xi0=1.8, xi_inf=0.1, ell=1.0):
    return PerformanceEnvelope(xi0=xi0, xi_inf=xi_inf, ell=ell, delta_bar=delta, delta_under=delta)


PAPER = sym(1.8)


def test_envelope_at_values():
    assert envelope_at(PAPER, 0.0) == pytest.approx(1.8, abs=1e-15)
    assert envelope_at(PAPER, 1.0) == pytest.approx(1.7 * math.exp(-1.0) + 0.1, abs=1e-15)
    assert envelope_at(PAPER, 1.0) == pytest.approx(0.72539, abs=1e-5)
    assert envelope_at(PAPER, 1e3) == pytest.approx(0.1, abs=1e-15)


def test_envelope_decreasing_and_bounded():
    t = np.linspace(0.0, 20.0, 2001)
    assert np.all(np.diff(envelope_at(PAPER, t)) < 0)
    # past ~35 s the decay is below double resolution around xi_inf
    xi = envelope_at(PAPER, np.linspace(0.0, 100.0, 10001))
    assert np.all(np.diff(xi) <= 0)
    assert np.all(xi >= 0.1)


def test_envelope_rate_matches_difference():
    h = 1e-6
    for t in (0.0, 0.5, 3.0):
        fd = (envelope_at(PAPER, t + h) - envelope_at(PAPER, t - h)) / (2 * h) if t else \
            (envelope_at(PAPER, h) - envelope_at(PAPER, 0.0)) / h
        assert envelope_rate(PAPER, t) == pytest.approx(fd, rel=1e-5)


@pytest.mark.parametrize("bad", [
    dict(xi0=0.05, xi_inf=0.1, ell=1.0, delta_bar=1.0, delta_under=1.0),
    dict(xi0=1.0, xi_inf=0.0, ell=1.0, delta_bar=1.0, delta_under=1.0),
    dict(xi0=1.0, xi_inf=0.1, ell=0.0, delta_bar=1.0, delta_under=1.0),
    dict(xi0=1.0, xi_inf=0.1, ell=1.0, delta_bar=-1.0, delta_under=1.0),
    dict(xi0=np.nan, xi_inf=0.1, ell=1.0, delta_bar=1.0, delta_under=1.0),
])
def test_envelope_validation(bad):
    with pytest.raises(ConfigInvalid):
        PerformanceEnvelope(**bad)


def test_smooth_transform_values():
    assert smooth_transform(0.0, sym(2.0)) == 0.0
    assert smooth_transform(1.0, sym(2.0)) == pytest.approx(2 * math.tanh(1.0), abs=1e-15)
    assert smooth_transform(1.0, sym(2.0)) == pytest.approx(1.52318, abs=1e-5)
    env = PerformanceEnvelope(1.8, 0.1, 1.0, 2.0, 0.5)
    assert smooth_transform(1e6, env) == pytest.approx(2.0)
    assert smooth_transform(-1e6, env) == pytest.approx(-0.5)
    # written form (d_bar e^E - d_under e^-E) / (e^E + e^-E)
    E = 0.7
    direct = (2.0 * math.exp(E) - 0.5 * math.exp(-E)) / (math.exp(E) + math.exp(-E))
    assert smooth_transform(E, env) == pytest.approx(direct, abs=1e-15)


def test_smooth_transform_no_overflow():
    out = smooth_transform(np.array([-1e308, -800.0, 800.0, 1e308]), sym(3.0))
    np.testing.assert_array_equal(out, [-3.0, -3.0, 3.0, 3.0])


@given(st.floats(-20, 20), st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.05, 5))
def test_round_trip(E, dbar, dund, xi):
    env = PerformanceEnvelope(xi0=xi + 1.0, xi_inf=0.01, ell=1.0, delta_bar=dbar, delta_under=dund)
    e = xi * smooth_transform(E, env)
    s = e / xi
    # keep clear of the edge where E is not recoverable in floating point
    if not (-dund * (1 - 1e-9) < s < dbar * (1 - 1e-9)):
        return
    if abs(E) < 8:
        assert inverse_transform(e, xi, env) == pytest.approx(E, abs=1e-9)
    assert xi * smooth_transform(inverse_transform(e, xi, env), env) == pytest.approx(e, abs=1e-9)


def test_inverse_transform_zero_and_sign():
    assert inverse_transform(0.0, 1.0, sym(1.5)) == 0.0
    assert inverse_transform(0.3, 1.0, sym(1.5)) > 0
    assert inverse_transform(-0.3, 1.0, sym(1.5)) < 0


def test_inverse_transform_grows_near_edge():
    env = sym(1.0)
    values = [inverse_transform(1.0 - 10.0 ** -k, 1.0, env) for k in (2, 4, 6, 8)]
    assert np.all(np.diff(values) > 1.0)


@pytest.mark.parametrize("e", [1.0, -1.0, 1.5, 2.0, np.nan])
def test_inverse_transform_outside_raises(e):
    with pytest.raises(EnvelopeViolation):
        inverse_transform(e, 1.0, sym(1.0))


def test_violation_reports_index():
    e = np.zeros((4, 3))
    e[2, 1] = 5.0
    with pytest.raises(EnvelopeViolation) as info:
        inverse_transform(e, np.ones((4, 3)), sym(1.0))
    assert info.value.index == (2, 1)
    assert info.value.ratio == 5.0


@pytest.mark.parametrize("e, xi, delta, expected", [
    (0.0, 1.0, 1.0, 1.0),
    (0.5, 1.0, 2.0, 0.5 * (1 / 2.5 + 1 / 1.5)),
])
def test_eta_values(e, xi, delta, expected):
    assert eta(e, xi, sym(delta)) == pytest.approx(expected, abs=1e-15)


def test_eta_is_derivative(rng):
    h = 1e-6
    for _ in range(200):
        dbar, dund = rng.uniform(0.5, 4.0, 2)
        xi = rng.uniform(0.1, 3.0)
        env = PerformanceEnvelope(xi0=xi + 1, xi_inf=0.05, ell=1.0, delta_bar=dbar, delta_under=dund)
        e = xi * rng.uniform(-dund * 0.9, dbar * 0.9)
        fd = (inverse_transform(e + h, xi, env) - inverse_transform(e - h, xi, env)) / (2 * h)
        assert eta(e, xi, env) == pytest.approx(fd, rel=1e-6, abs=1e-6)
        assert eta(e, xi, env) > 0


def test_lambda_mu():
    lam, mu = lambda_mu(sym(1.0, xi0=1.0, xi_inf=0.1), np.zeros(3), 0.0)
    np.testing.assert_allclose(lam, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(np.diag(mu), -0.9, atol=1e-15)
    _, mu = lambda_mu(PAPER, np.zeros(3), 0.0)
    np.testing.assert_allclose(np.diag(mu), -1.7 / 1.8, atol=1e-15)
    _, mu = lambda_mu(PAPER, np.zeros(3), 60.0)
    np.testing.assert_allclose(mu, np.zeros((3, 3)), atol=1e-20)


def test_lambda_mu_stacks_per_landmark():
    env = sym(np.full((4, 3), 1.8))
    lam, mu = lambda_mu(env, np.zeros((4, 3)), 0.0)
    assert lam.shape == (4, 3, 3)
    assert mu.shape == (4, 3, 3)
    assert np.all(np.linalg.eigvalsh(lam) > 0)


@pytest.mark.parametrize("e0, expected", [(0.0, 1.8), (-3.0, 5.4), (3.0, 5.4), (8.0, 11.4)])
def test_envelope_from_initial_error(e0, expected):
    env = envelope_from_initial_error(e0)
    for f in (env.xi0, env.delta_bar, env.delta_under):
        assert float(f) == pytest.approx(expected, abs=1e-15)
    assert float(env.xi_inf) == 0.1
    assert float(env.ell) == 1.0
    assert abs(e0) < float(env.delta_bar * env.xi0)


def test_envelope_from_initial_error_vectorized():
    e0 = np.array([[-8.0, -8.0, 3.0], [8.0, -8.0, 3.0]])
    env = envelope_from_initial_error(e0)
    assert env.shape == (2, 3)
    assert env.symmetric
    np.testing.assert_allclose(env.xi0, 1.2 * np.abs(e0) + 1.8)


def test_asymmetric_envelope_warns():
    env = PerformanceEnvelope(2.0, 0.1, 1.0, 1.0, 2.0)
    with pytest.warns(UserWarning, match="experimental"):
        check_initial_error(env, np.array(0.5))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        check_initial_error(sym(1.0), np.array(0.5))


def test_envelope_dict_round_trip():
    env = envelope_from_initial_error(np.array([[1.0, -2.0, 0.0]] * 3))
    back = PerformanceEnvelope.from_dict(env.to_dict())
    for f in ("xi0", "xi_inf", "ell", "delta_bar", "delta_under"):
        np.testing.assert_array_equal(getattr(back, f), getattr(env, f))
    assert back[1, 1].xi0 == env.xi0[1, 1]

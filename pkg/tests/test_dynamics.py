import numpy as np
import pytest
from hypothesis import given, strategies as st

from blochloc.core import BlochVector
from blochloc.dynamics import (
    ConstantAlpha,
    CustomAlpha,
    PolynomialEvenAlpha,
    eval_alpha,
    get_alpha,
    ito_diffusion,
    ito_drift,
    register_alpha,
)

from conftest import unit_vectors


@pytest.mark.parametrize("model, z, expected", [
    (PolynomialEvenAlpha(1), 1.0, 0.0),
    (PolynomialEvenAlpha(1), -1.0, 0.0),
    (PolynomialEvenAlpha(1), 0.0, 1.0),
    (PolynomialEvenAlpha(2), 0.5, 1.5),
    (ConstantAlpha(0.3), 0.9, 0.3),
])
def test_eval_alpha(model, z, expected):
    assert eval_alpha(model, z) == pytest.approx(expected, abs=1e-15)


def test_overshoot_is_clamped():
    m = PolynomialEvenAlpha(1)
    assert eval_alpha(m, 1 + 1e-10) == 0.0
    assert eval_alpha(m, -1 - 1e-10) == 0.0


def test_polynomial_even_is_even_and_positive():
    m = PolynomialEvenAlpha(1.3)
    z = np.linspace(-1, 1, 1000)
    np.testing.assert_array_equal(eval_alpha(m, z), eval_alpha(m, -z))
    assert np.all(eval_alpha(m, z[1:-1]) > 0)
    assert m.fixes_poles and not ConstantAlpha(1).fixes_poles


@pytest.mark.parametrize("b, model, beta, expected", [
    ((1, 0, 0), ConstantAlpha(1), 1, (-2, 0, 0)),
    ((0, 0, 1), ConstantAlpha(1), 0, (0, -2, 0)),
    ((0, 1, 0), PolynomialEvenAlpha(1), 2, (0, -8, 2)),
])
def test_ito_drift(b, model, beta, expected):
    np.testing.assert_allclose(ito_drift(BlochVector(*b), model, beta), expected, atol=1e-15)


@pytest.mark.parametrize("b, beta, expected", [
    ((1, 0, 0), 1, (0, 2, 0)),
    ((0, 1, 0), 1, (-2, 0, 0)),
    ((0.3, 0.4, 0.866), 0, (0, 0, 0)),
])
def test_ito_diffusion(b, beta, expected):
    np.testing.assert_allclose(ito_diffusion(b, beta), expected, atol=1e-15)


@given(unit_vectors(), st.floats(0, 10), st.floats(-5, 5))
def test_drift_and_diffusion_geometry(b, beta, a0):
    b = np.asarray(b)
    for model in (ConstantAlpha(a0), PolynomialEvenAlpha(a0)):
        drift = ito_drift(b, model, beta)
        # the alpha rotation is tangent, only the Ito contraction moves |b|
        assert b @ drift == pytest.approx(-2 * beta ** 2 * (b[0] ** 2 + b[1] ** 2), abs=1e-9)
    assert b @ ito_diffusion(b, beta) == pytest.approx(0, abs=1e-12)
    assert ito_diffusion(b, beta)[2] == 0


def test_fields_vectorise_over_stacks():
    states = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1.0]])
    d = ito_drift(states, PolynomialEvenAlpha(1), 2)
    assert d.shape == (3, 3)
    np.testing.assert_allclose(d[1], ito_drift(states[1], PolynomialEvenAlpha(1), 2))


def test_custom_profile_registration():
    m = register_alpha("quartic", lambda z: 0.5 * (1 - z ** 2) ** 2)
    assert get_alpha("quartic") is m
    assert eval_alpha(m, 0.0) == 0.5
    assert eval_alpha(m, 1.0) == 0.0


@pytest.mark.parametrize("profile", [
    lambda z: 1 - z ** 2 + 0.1 * z,   # not even
    lambda z: 1.5 - z ** 2,           # nonzero at the poles
    lambda z: -(1 - z ** 2),          # negative inside
])
def test_custom_profile_validation(profile):
    with pytest.raises(ValueError):
        CustomAlpha(profile)
    with pytest.raises(KeyError):
        get_alpha("never-registered")

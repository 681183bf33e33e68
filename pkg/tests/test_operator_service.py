import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from errors import DomainError, NumericalError
from models import HermiteExpansion, TimeGrid
from services.hermite_service import multi_indices_up_to
from services.operator_service import (bessel_derivative_integral, bessel_derivative_spectral,
                                       bessel_potential_integral, bessel_potential_spectral, c_beta,
                                       c_beta_closed_form, derivative_difference, forward_difference,
                                       forward_difference_integral, iterated_forward_difference,
                                       semigroup_power_difference)

ALL_UP_TO_16 = HermiteExpansion(1, {index: 1.0 for index in multi_indices_up_to(1, 16)})
ALL_UP_TO_25 = HermiteExpansion(1, {index: 1.0 for index in multi_indices_up_to(1, 25)})


def test_spectral_multipliers():
    h4 = HermiteExpansion.basis((4,))
    assert bessel_potential_spectral(h4, 1.0).coefficient((4,)) == pytest.approx(1.0 / 3.0)
    assert bessel_derivative_spectral(h4, 2.0).coefficient((4,)) == pytest.approx(9.0)
    assert bessel_potential_spectral(ALL_UP_TO_16, 0.0) == ALL_UP_TO_16
    with pytest.raises(DomainError):
        bessel_potential_spectral(h4, -1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_potentials_compose(beta1, beta2):
    composed = bessel_potential_spectral(bessel_potential_spectral(ALL_UP_TO_16, beta1), beta2)
    direct = bessel_potential_spectral(ALL_UP_TO_16, beta1 + beta2)
    np.testing.assert_allclose(composed.values, direct.values, rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 3.0))
def test_derivative_inverts_potential(beta):
    round_trip = bessel_derivative_spectral(bessel_potential_spectral(ALL_UP_TO_16, beta), beta)
    np.testing.assert_allclose(round_trip.values, ALL_UP_TO_16.values, rtol=1e-12)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.5])
def test_potential_integral_matches_spectral(beta):
    np.testing.assert_allclose(bessel_potential_integral(ALL_UP_TO_16, beta).values,
                               bessel_potential_spectral(ALL_UP_TO_16, beta).values, rtol=1e-8)


@pytest.mark.parametrize("beta", [0.5, 1.0, 1.5, 2.5])
def test_derivative_integral_matches_spectral(beta):
    np.testing.assert_allclose(bessel_derivative_integral(ALL_UP_TO_25, beta).values,
                               bessel_derivative_spectral(ALL_UP_TO_25, beta).values, rtol=1e-8)


def test_derivative_integral_at_small_beta():
    f = HermiteExpansion(1, {index: 1.0 for index in multi_indices_up_to(1, 9)})
    np.testing.assert_allclose(bessel_derivative_integral(f, 0.3).values,
                               bessel_derivative_spectral(f, 0.3).values, rtol=1e-6)


@pytest.mark.parametrize("beta", [0.5, 1.0, 1.5, 2.5])
def test_integral_forms_round_trip(beta):
    round_trip = bessel_derivative_integral(bessel_potential_integral(ALL_UP_TO_25, beta), beta)
    np.testing.assert_allclose(round_trip.values, ALL_UP_TO_25.values, rtol=1e-7)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.5])
def test_derivative_integral_on_the_default_grid(grid, beta):
    f = HermiteExpansion(1, {index: 1.0 for index in multi_indices_up_to(1, 9)})
    np.testing.assert_allclose(bessel_derivative_integral(f, beta, grid=grid).values,
                               bessel_derivative_spectral(f, beta).values, rtol=1e-7)


def test_derivative_integral_fixes_constants():
    assert bessel_derivative_integral(HermiteExpansion.basis((0,)), 0.7).coefficient((0,)) == pytest.approx(
        1.0, abs=1e-12)


def test_integral_on_a_short_grid_is_rejected():
    with pytest.raises(NumericalError):
        bessel_potential_integral(ALL_UP_TO_16, 1.0, grid=TimeGrid(0.1, 10.0, 101))
    with pytest.raises(NumericalError):
        bessel_derivative_integral(ALL_UP_TO_16, 0.5, grid=TimeGrid(0.1, 10.0, 101))


def test_integral_orders_are_validated():
    with pytest.raises(DomainError):
        bessel_potential_integral(ALL_UP_TO_16, 0.0)
    with pytest.raises(DomainError):
        bessel_derivative_integral(ALL_UP_TO_16, -0.5)


def test_c_beta_known_value():
    # c^1_{1/2} = int u^{-3/2}(e^{-u} - 1) du = Gamma(-1/2)
    assert c_beta(1, 0.5) == pytest.approx(-2.0 * math.sqrt(math.pi), rel=1e-10)


@pytest.mark.parametrize("k, beta", [(1, 0.25), (1, 0.5), (2, 1.5), (3, 0.5), (3, 2.7)])
def test_c_beta_methods_agree(k, beta):
    by_quad = c_beta(k, beta)
    assert math.copysign(1.0, by_quad) == (-1.0) ** k
    assert c_beta(k, beta, method="trapezoid") == pytest.approx(by_quad, rel=1e-6)
    assert c_beta_closed_form(k, beta) == pytest.approx(by_quad, rel=1e-8)


def test_c_beta_closed_form_at_integer_beta():
    assert c_beta_closed_form(2, 1.0) == pytest.approx(2.0 * math.log(2.0), rel=1e-12)
    assert c_beta_closed_form(2, 1.0) == pytest.approx(c_beta(2, 1.0), rel=1e-8)
    # k = 3, beta = 2: 6 log 2 - 9/2 log 3
    assert c_beta_closed_form(3, 2.0) == pytest.approx(6.0 * math.log(2.0) - 4.5 * math.log(3.0), rel=1e-12)
    assert c_beta_closed_form(3, 2.0) == pytest.approx(c_beta(3, 2.0), rel=1e-8)


def test_c_beta_preconditions():
    with pytest.raises(DomainError):
        c_beta(1, 1.0)
    with pytest.raises(DomainError):
        c_beta(2, 0.0)
    with pytest.raises(DomainError):
        c_beta(2, 0.5, method="simpson")


@pytest.mark.parametrize("k", [1, 2, 3])
def test_forward_difference_forms_agree(k):
    s, t = 0.3, 0.7
    expected = math.exp(-t) * (math.exp(-s) - 1.0) ** k
    assert forward_difference(lambda x: math.exp(-x), k, s, t) == pytest.approx(expected, rel=1e-12)
    assert iterated_forward_difference(lambda x: math.exp(-x), k, s, t) == pytest.approx(expected, rel=1e-12)
    derivative = (-1.0) ** k
    assert forward_difference_integral(lambda x: derivative * np.exp(-x), k, s, t) == pytest.approx(
        expected, rel=1e-10)


def test_forward_difference_preconditions():
    with pytest.raises(DomainError):
        forward_difference(math.exp, 0, 0.1)
    with pytest.raises(DomainError):
        forward_difference(math.exp, 1, -0.1)


def test_semigroup_power_difference():
    f = HermiteExpansion.basis((4,))
    t = 0.4
    expected = (math.exp(-2.0 * t) - 1.0) ** 3
    assert semigroup_power_difference(f, t, 3).coefficient((4,)) == pytest.approx(expected, rel=1e-10)
    assert semigroup_power_difference(HermiteExpansion.basis((0,)), t, 2).coefficient((0,)) == pytest.approx(
        0.0, abs=1e-15)


def test_derivative_difference_closed_form():
    f = HermiteExpansion.basis((9,))
    t, s = 0.5, 0.2
    a = 3.0
    expected = (-a) * math.exp(-t * a) * (math.exp(-s * a) - 1.0) ** 2
    assert derivative_difference(f, t, s, 2, 1).coefficient((9,)) == pytest.approx(expected, rel=1e-10)

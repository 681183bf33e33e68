import math

import numpy as np
import pytest

from errors import DomainError
from models import BesovParams, HermiteExpansion, MeasureKind
from services.besov_service import (besov_infty_constant, besov_norm, besov_seminorm, describe,
                                    eigen_infty_constant_closed_form, eigen_seminorm_closed_form, grid_supremum,
                                    inclusion_diagnostic, inner_norm_trace)
from services.exponent_service import constant_exponent, rational_decay_exponent

TWO = constant_exponent(2.0)
Q_TWO = constant_exponent(2.0, MeasureKind.HAAR)
Q_INF = constant_exponent(math.inf, MeasureKind.HAAR)


def eigen(order):
    return HermiteExpansion.basis((order,))


def test_inner_norm_trace_of_eigenfunction(rule1):
    times = np.array([0.1, 1.0, 5.0])
    trace = inner_norm_trace(eigen(4), 1, TWO, times, rule1)
    np.testing.assert_allclose(trace, 2.0 * np.exp(-2.0 * times), rtol=1e-10)


def test_seminorm_of_first_eigenfunction(grid, rule1):
    result = besov_seminorm(eigen(1), BesovParams(0.5, TWO, Q_TWO, grid, rule1))
    assert result.value == pytest.approx(math.sqrt(0.5), rel=1e-4)
    assert result.in_space
    assert result.residual < 0.05 * result.value
    assert len(result.rows()) == grid.count
    assert besov_norm(eigen(1), BesovParams(0.5, TWO, Q_TWO, grid, rule1)) == pytest.approx(1.707107, rel=1e-4)


@pytest.mark.parametrize("q", [1.0, 2.0, 4.0, math.inf])
@pytest.mark.parametrize("alpha", [0.5, 1.5])
@pytest.mark.parametrize("order", range(1, 17))
def test_seminorm_matches_eigen_closed_form(grid, rule1, order, alpha, q):
    params = BesovParams(alpha, TWO, constant_exponent(q, MeasureKind.HAAR), grid, rule1)
    expected = eigen_seminorm_closed_form(order, alpha, params.k, q)
    assert besov_seminorm(eigen(order), params).value == pytest.approx(expected, rel=1e-4)


@pytest.mark.parametrize("order, alpha, q", [(2, 0.3, 2.0), (5, 0.5, 3.0), (9, 0.8, 1.5)])
def test_seminorm_closed_form_at_other_levels(grid, rule1, order, alpha, q):
    params = BesovParams(alpha, TWO, constant_exponent(q, MeasureKind.HAAR), grid, rule1)
    expected = eigen_seminorm_closed_form(order, alpha, params.k, q)
    assert besov_seminorm(eigen(order), params).value == pytest.approx(expected, rel=1e-3)


def test_infty_constant_closed_form(grid, rule1):
    result = besov_infty_constant(eigen(1), 0.5, 1, TWO, grid, rule1)
    assert result.value == pytest.approx(0.428882, rel=1e-4)
    assert result.maximizer == pytest.approx(0.5, rel=1e-2)
    assert not result.at_boundary
    assert eigen_infty_constant_closed_form(1, 0.5, 1) == pytest.approx(0.428882, rel=1e-5)
    assert eigen_seminorm_closed_form(1, 0.5, 1, math.inf) == eigen_infty_constant_closed_form(1, 0.5, 1)


def test_q_infinite_seminorm_is_a_supremum(grid, rule1):
    result = besov_seminorm(eigen(4), BesovParams(0.5, TWO, Q_INF, grid, rule1))
    assert result.value == pytest.approx(eigen_infty_constant_closed_form(4, 0.5, 1), rel=1e-4)
    assert result.maximizer == pytest.approx(0.25, rel=1e-2)


def test_constants_have_zero_seminorm(grid, rule1):
    result = besov_seminorm(HermiteExpansion.basis((0,), 3.0), BesovParams(0.5, TWO, Q_TWO, grid, rule1))
    assert result.value == 0.0
    assert result.in_space
    assert besov_norm(HermiteExpansion.basis((0,), 3.0), BesovParams(0.5, TWO, Q_TWO, grid, rule1)) == \
        pytest.approx(3.0)


def test_variable_exponents_give_finite_seminorms(grid, rule1):
    p = rational_decay_exponent(2.0, 1.0, 2.0)
    q = rational_decay_exponent(2.0, 1.0, 1.0, shift=1.0, domain=MeasureKind.HAAR)
    f = HermiteExpansion(1, {(1,): 1.0, (3,): -0.5, (6,): 0.25})
    result = besov_seminorm(f, BesovParams(0.5, p, q, grid, rule1))
    assert math.isfinite(result.value) and result.value > 0
    assert result.in_space


def test_k_must_exceed_alpha(grid, rule1):
    with pytest.raises(DomainError):
        besov_infty_constant(eigen(1), 1.0, 1, TWO, grid, rule1)


def test_grid_supremum_flags_the_boundary():
    times = np.geomspace(1e-3, 1.0, 31)
    edge = grid_supremum(times, times)
    assert edge.at_boundary and edge.maximizer == pytest.approx(1.0)
    zero = grid_supremum(times, np.zeros(31))
    assert zero.value == 0.0 and math.isnan(zero.maximizer)
    interior = grid_supremum(times, np.exp(-(np.log(times) + 3.0) ** 2))
    assert interior.value == pytest.approx(1.0, rel=1e-6)
    assert interior.maximizer == pytest.approx(math.exp(-3.0), rel=1e-6)


def test_describe_labels():
    assert describe(eigen(3)) == "h(3)"
    assert describe(HermiteExpansion(1, {(0,): 1.0, (1,): 1.0}), 4) == "member[4]"


def test_inclusion_in_smoothness(grid, rule1):
    family = [eigen(n) for n in range(1, 7)]
    report = inclusion_diagnostic(family, 1.0, Q_TWO, 0.5, Q_TWO, TWO, grid, rule1, extension=[eigen(7), eigen(8)])
    assert report.passed
    assert report.ratio == pytest.approx(1.138, rel=1e-3)
    assert report.witness == "h(1)"
    assert report.stability_delta == pytest.approx(0.0, abs=1e-12)


def test_inclusion_in_the_outer_exponent(grid, rule1):
    family = [eigen(n) for n in range(0, 6)]
    q_four = constant_exponent(4.0, MeasureKind.HAAR)
    report = inclusion_diagnostic(family, 0.5, Q_TWO, 0.5, q_four, TWO, grid, rule1)
    assert report.passed
    assert report.ratio == pytest.approx(1.0, rel=1e-9)
    assert report.witness == "h(0)"


def test_reversed_inclusion_grows_like_a_power(grid, rule1):
    family = [eigen(n) for n in (1, 4, 9, 16)]
    report = inclusion_diagnostic(family, 0.5, Q_TWO, 1.0, Q_TWO, TWO, grid, rule1)
    assert "reversed" in report.flags
    assert report.passed
    assert report.ratio == pytest.approx(16.0 ** 0.25, rel=0.05)
    assert report.details["growth_exponent"] == pytest.approx(0.25)

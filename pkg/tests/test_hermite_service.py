import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from errors import DimensionMismatchError, DomainError, NumericalError
from models import HermiteExpansion, MultiIndex
from services.hermite_service import (as_points, chaos_decomposition, chaos_projection, expansion_eval,
                                      fourier_coefficient, gauss_rule, hermite_design, hermite_eval,
                                      multi_indices, multi_indices_up_to, project_function, trapezoid_rule)


def test_orthonormal_on_gauss_rule(rule1):
    indices = multi_indices_up_to(1, 20)
    design = hermite_design(indices, rule1.nodes)
    gram = design.T @ (rule1.weights[:, None] * design)
    np.testing.assert_allclose(gram, np.eye(len(indices)), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.tuples(st.integers(0, 6), st.integers(0, 6)), st.tuples(st.integers(0, 6), st.integers(0, 6)))
def test_orthonormal_in_two_dimensions(first, second):
    rule = gauss_rule(2, 20)
    a = hermite_eval(first, rule.nodes)
    b = hermite_eval(second, rule.nodes)
    expected = 1.0 if first == second else 0.0
    assert float(np.dot(rule.weights, a * b)) == pytest.approx(expected, abs=1e-10)


def test_low_order_closed_forms():
    x = 1.3
    assert hermite_eval((0,), x) == 1.0
    assert hermite_eval((1,), x) == pytest.approx(math.sqrt(2.0) * x)
    assert hermite_eval((2,), x) == pytest.approx((2.0 * x * x - 1.0) / math.sqrt(2.0))
    assert hermite_eval((1, 2), [x, 0.4]) == pytest.approx(math.sqrt(2.0) * x * (2 * 0.16 - 1) / math.sqrt(2.0))


def test_as_points_shapes():
    points, single = as_points(0.5, 1)
    assert points.shape == (1, 1) and single
    points, single = as_points([0.1, 0.2, 0.3], 1)
    assert points.shape == (3, 1) and not single
    points, single = as_points([0.1, 0.2], 2)
    assert points.shape == (1, 2) and single
    with pytest.raises(DimensionMismatchError):
        as_points([0.1, 0.2, 0.3], 2)


def test_rules_are_probability_measures():
    assert gauss_rule(1, 30).weights.sum() == pytest.approx(1.0)
    assert gauss_rule(3, 6).weights.sum() == pytest.approx(1.0)
    flat = trapezoid_rule(1, 2001)
    assert flat.weights.sum() == pytest.approx(1.0)
    second_moment = float(np.dot(flat.weights, flat.nodes[:, 0] ** 2))
    assert second_moment == pytest.approx(0.5, rel=1e-10)


def test_rule_limits():
    with pytest.raises(DomainError):
        gauss_rule(1, 201)
    with pytest.raises(DomainError):
        gauss_rule(0, 10)
    with pytest.raises(DomainError):
        trapezoid_rule(1, 1)


def test_fourier_coefficient_of_identity(rule1):
    assert fourier_coefficient(lambda x: x[:, 0], (1,), rule1) == pytest.approx(1.0 / math.sqrt(2.0))
    assert fourier_coefficient(lambda x: x[:, 0], (2,), rule1) == pytest.approx(0.0, abs=1e-14)


def test_fourier_coefficient_rejects_non_finite(rule1):
    with pytest.raises(NumericalError):
        fourier_coefficient(lambda x: np.full(x.shape[0], np.nan), (0,), rule1)


def test_project_square(rule1):
    f = project_function(lambda x: x[:, 0] ** 2, 1, 4, rule1)
    assert f.coefficient((0,)) == pytest.approx(0.5)
    assert f.coefficient((2,)) == pytest.approx(math.sqrt(2.0) / 2.0)
    for order in (1, 3, 4):
        assert f.coefficient((order,)) == pytest.approx(0.0, abs=1e-12)
    assert expansion_eval(f, 0.7) == pytest.approx(0.49)


def test_chaos_decomposition_sums_back():
    f = HermiteExpansion(2, {(0, 0): 1.0, (1, 0): 2.0, (0, 1): -1.0, (2, 1): 0.5})
    parts = chaos_decomposition(f)
    assert sorted(parts) == [0, 1, 3]
    assert chaos_projection(f, 1).coefficients == {MultiIndex.of(0, 1): -1.0, MultiIndex.of(1, 0): 2.0}
    total = HermiteExpansion.zero(2)
    for part in parts.values():
        total = total + part
    assert total == f


def test_multi_index_enumeration():
    assert len(multi_indices(2, 3)) == 4
    assert len(multi_indices_up_to(3, 2)) == 10
    assert all(index.order == 5 for index in multi_indices(3, 5))


def test_expansion_eval_on_arrays():
    f = HermiteExpansion(1, {(0,): 1.0, (1,): 1.0})
    values = expansion_eval(f, np.array([0.0, 1.0]))
    np.testing.assert_allclose(values, [1.0, 1.0 + math.sqrt(2.0)])
    assert expansion_eval(HermiteExpansion.zero(1), 3.0) == 0.0

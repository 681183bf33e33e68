import math

import numpy as np
import pytest

from errors import DimensionMismatchError, DomainError
from models import (BOUND_FINITE_STABLE, BesovParams, BesselOrder, DiscretizedFunction, ForwardDifference,
                    HermiteExpansion, MeasureKind, MultiIndex, TimeGrid, VerificationReport)
from services.exponent_service import constant_exponent


def test_multi_index_order_and_factorial():
    index = MultiIndex.of(2, 0, 3)
    assert index.order == 5
    assert index.factorial == 12
    assert index.dimension == 3
    assert str(index) == "(2,0,3)"


def test_multi_index_rejects_negative_entries():
    with pytest.raises(DomainError):
        MultiIndex.of(1, -1)


def test_expansion_merges_and_sorts_coefficients():
    f = HermiteExpansion(1, {(3,): 1.0, (1,): 2.0})
    g = HermiteExpansion(1, {(1,): -2.0, (0,): 5.0})
    total = f + g
    assert [index.entries for index in total.indices] == [(0,), (1,), (3,)]
    assert total.coefficient((1,)) == 0.0
    assert total.coefficient((7,)) == 0.0


def test_expansion_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        HermiteExpansion(2, {(1,): 1.0})
    with pytest.raises(DimensionMismatchError):
        HermiteExpansion.basis((1,)) + HermiteExpansion.basis((1, 0))


def test_expansion_multiplier_and_l2_norm():
    f = HermiteExpansion(1, {(0,): 3.0, (4,): 4.0})
    assert f.l2_norm() == pytest.approx(5.0)
    halved = f.apply_multiplier(lambda n: np.where(n > 0, 0.5, 1.0))
    assert halved.coefficient((4,)) == pytest.approx(2.0)
    assert halved.coefficient((0,)) == pytest.approx(3.0)


def test_time_grid_refinement_keeps_points():
    grid = TimeGrid(1e-3, 10.0, 5)
    fine = grid.refined(2)
    assert fine.count == 9
    np.testing.assert_allclose(fine.points[::2], grid.points)
    assert fine.coarsened() == grid
    assert grid.haar_weights.sum() == pytest.approx(math.log(1e4))


def test_time_grid_validation():
    with pytest.raises(DomainError):
        TimeGrid(0.0, 1.0, 10)
    with pytest.raises(DomainError):
        TimeGrid(1.0, 2.0, 1)


def test_discretized_function_takes_magnitudes():
    f = DiscretizedFunction(np.array([-1.0, 2.0]), np.array([0.5, 0.5]), np.zeros((2, 1)))
    np.testing.assert_array_equal(f.values, [1.0, 2.0])
    with pytest.raises(DomainError):
        DiscretizedFunction(np.ones(2), np.array([1.0, 0.0]), np.zeros((2, 1)))


def test_bessel_order_and_forward_difference():
    assert BesselOrder(0.5).k == 1
    assert BesselOrder(2.0).k == 3
    with pytest.raises(DomainError):
        BesselOrder(0.0)
    difference = ForwardDifference(3, 0.5, 1.0)
    assert difference.points == [2.5, 2.0, 1.5, 1.0]
    assert difference.coefficients == [1, -3, 3, -1]
    with pytest.raises(DomainError):
        ForwardDifference(1, 0.0)


def test_besov_params_defaults_k(grid):
    two = constant_exponent(2.0)
    params = BesovParams(1.5, two, constant_exponent(2.0, MeasureKind.HAAR), grid)
    assert params.k == 2
    with pytest.raises(DomainError):
        BesovParams(1.0, two, two, grid, k=1)
    with pytest.raises(DomainError):
        BesovParams(0.5, constant_exponent(1.0), two, grid)


def test_conjugate_and_harmonic_exponents():
    three = constant_exponent(3.0)
    assert three.conjugate().p_minus == pytest.approx(1.5)
    assert three.harmonic(constant_exponent(6.0)).p_plus == pytest.approx(2.0)
    with pytest.raises(DomainError):
        constant_exponent(1.0).conjugate()


def test_report_pass_is_recomputed_from_fields():
    stable = VerificationReport("x", {}, 3.0, BOUND_FINITE_STABLE, False, stability_delta=0.01)
    assert stable.recompute_pass()
    assert not VerificationReport("x", {}, 3.0, BOUND_FINITE_STABLE, True, stability_delta=0.2).recompute_pass()
    assert VerificationReport("x", {}, 1.9, 2.0, False).recompute_pass()
    assert not VerificationReport("x", {}, 0.3, 2.0, True, lower_bound=0.45).recompute_pass()
    assert not VerificationReport("x", {}, math.inf, 2.0, True).recompute_pass()
    assert VerificationReport("x", {}, 0.0, 2.0, False, flags=("vacuous",)).recompute_pass()
    assert not VerificationReport("x", {}, 0.0, 2.0, True, flags=("failed",)).recompute_pass()

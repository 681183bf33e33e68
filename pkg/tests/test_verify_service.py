import math
import time

import numpy as np
import pytest

from config import load_defaults
from errors import DimensionMismatchError, DomainError
from models import HermiteExpansion, MeasureKind
from services.exponent_service import (constant_exponent, discretize_expansion, rational_decay_exponent)
from services import verify_service
from services.verify_service import (VerificationService, build_family, check_classical_hardy,
                                     check_forward_difference_bound, check_holder, check_kdecay,
                                     check_lp_boundedness, check_norm_conjugate, check_stable_derivative_mass,
                                     check_theorem_dbeta, check_theorem_jbeta, check_theorem_jbeta_infty,
                                     check_variable_hardy, extension_family)

TWO = constant_exponent(2.0)
Q_TWO = constant_exponent(2.0, MeasureKind.HAAR)
P_VAR = rational_decay_exponent(2.0, 1.0, 2.0)


def small_family(high=4):
    return [(f"h({n})", HermiteExpansion.basis((n,))) for n in range(high + 1)]


def test_family_is_seeded():
    family = build_family(1, max_order=3, random_count=2, random_order=4, seed=7)
    assert [label for label, _ in family] == ["h(0)", "h(1)", "h(2)", "h(3)", "random[0]", "random[1]"]
    again = build_family(1, max_order=3, random_count=2, random_order=4, seed=7)
    assert again[-1][1] == family[-1][1]
    other = build_family(1, max_order=3, random_count=2, random_order=4, seed=8)
    assert other[-1][1] != family[-1][1]
    assert len(build_family(2, max_order=2, random_count=0)) == 6
    assert [label for label, _ in extension_family(1, 17, 18)] == ["h(17)", "h(18)"]


def test_classical_hardy_exponential():
    report = check_classical_hardy(lambda y: math.exp(-y), 2.0, 1.0)
    assert report.passed
    assert report.details["lhs_zero"] == pytest.approx(2.0 * math.log(2.0), rel=1e-8)
    assert report.details["rhs_zero"] == pytest.approx(0.5, rel=1e-8)
    assert report.ratio == pytest.approx(4.0 * math.log(2.0), rel=1e-6)
    assert report.bound == pytest.approx(4.0, rel=1e-5)


def test_classical_hardy_equality_case():
    report = check_classical_hardy(lambda y: y if y <= 1.0 else 0.0, 1.0, 1.0, breakpoints=(1.0,))
    assert report.ratio == pytest.approx(1.0, rel=1e-7)
    assert report.passed


def test_classical_hardy_vacuous_and_preconditions():
    report = check_classical_hardy(lambda y: 0.0, 2.0, 1.0)
    assert report.vacuous and report.passed
    with pytest.raises(DomainError):
        check_classical_hardy(lambda y: 0.0, 2.0, 0.0)


def test_variable_hardy(coarse_grid):
    report = check_variable_hardy(lambda y: y ** 2 * np.exp(-y), Q_TWO, 1.0, coarse_grid)
    assert report.passed
    assert 0.0 < report.ratio < math.inf
    q = rational_decay_exponent(2.0, 1.0, 1.0, shift=1.0, domain=MeasureKind.HAAR)
    variable = check_variable_hardy(lambda y: y * np.exp(-y), q, 0.5, coarse_grid)
    assert variable.passed
    assert all(c < 1.0 for c in variable.details["zero_infinity_constants"])


def test_norm_conjugate(rule1):
    f = discretize_expansion(HermiteExpansion.basis((1,)), rule1)
    constant = check_norm_conjugate(f, TWO)
    assert constant.passed
    assert constant.ratio == pytest.approx(1.0, rel=1e-6)
    variable = check_norm_conjugate(f, P_VAR)
    assert variable.passed
    assert 0.45 <= variable.ratio <= 2.0
    with pytest.raises(DomainError):
        check_norm_conjugate(f, constant_exponent(1.0))


def test_holder(rule1):
    f = discretize_expansion(HermiteExpansion.basis((1,)), rule1)
    cauchy_schwarz = check_holder(f, f, TWO, TWO)
    assert cauchy_schwarz.ratio == pytest.approx(1.0, rel=1e-9)
    assert cauchy_schwarz.passed
    ones = f.with_values(np.ones(f.values.size))
    assert check_holder(f, ones, TWO, constant_exponent(100.0)).passed
    zero = f.with_values(np.zeros(f.values.size))
    assert check_holder(zero, f, TWO, TWO).vacuous
    with pytest.raises(DimensionMismatchError):
        check_holder(f, discretize_expansion(HermiteExpansion.basis((1,)), rule1).with_values(np.ones(3)), TWO, TWO)


def test_kdecay_on_an_eigenfunction(grid, rule1):
    report = check_kdecay(HermiteExpansion.basis((4,)), 1, TWO, grid, rule1)
    assert report.passed
    assert report.ratio < 1.0
    assert report.details["decay_constant"] == pytest.approx(1.0 / math.e, rel=1e-3)
    assert check_kdecay(HermiteExpansion.basis((0,)), 2, TWO, grid, rule1).vacuous


def test_stable_derivative_mass_report():
    report = check_stable_derivative_mass(orders=(1, 2), times=[0.1, 1.0, 10.0])
    assert report.passed
    assert report.details["scaling_error"] < 1e-8
    assert set(report.details["constants"]) == {"1", "2"}


def test_forward_difference_bound(rule1):
    report = check_forward_difference_bound(small_family(3), k=2, n=1, p=TWO, s_count=5, t_count=5, rule=rule1)
    assert report.passed
    assert 0.99 < report.ratio <= 1.0


def test_lp_boundedness(rule1):
    family = small_family(6)
    potential = check_lp_boundedness(family, "bessel_potential", 1.0, TWO, rule1)
    assert potential.passed
    assert potential.ratio == pytest.approx(1.0)
    assert potential.witness == "h(0)"
    poisson = check_lp_boundedness(family, "poisson", 0.5, P_VAR, rule1)
    assert poisson.passed
    with pytest.raises(DomainError):
        check_lp_boundedness(family, "riesz", 1.0, TWO, rule1)


def test_theorem_jbeta(grid, rule1):
    report = check_theorem_jbeta(small_family(), 0.5, 0.5, TWO, Q_TWO, grid, rule1)
    assert report.passed
    assert report.details["closed_form_error"] < 1e-3
    assert 0.0 < report.ratio <= 1.0


def test_theorem_jbeta_infty(grid, rule1):
    report = check_theorem_jbeta_infty(small_family(), 0.5, 1.0, TWO, grid, rule1)
    assert report.passed
    assert report.params["k"] == 2


def test_theorem_dbeta(grid, rule1):
    report = check_theorem_dbeta(small_family(3), 1.5, 0.5, TWO, Q_TWO, grid, rule1)
    assert report.passed
    assert report.details["spectral_gap"] < 1e-6
    with pytest.raises(DomainError):
        check_theorem_dbeta(small_family(3), 0.5, 0.5, TWO, Q_TWO, grid, rule1)


def test_service_runs_selected_checks_in_name_order():
    service = VerificationService()
    reports = service.run(["holder.stress", "classical_hardy.exp", "holder.cauchy_schwarz"])
    assert [report.name for report in reports] == ["classical_hardy.exp", "holder.cauchy_schwarz", "holder.stress"]
    assert all(report.passed for report in reports)
    with pytest.raises(DomainError):
        service.run(["no_such_check"])


def test_service_parameters_move_theorem_levels():
    service = VerificationService()
    with pytest.raises(DomainError):
        service.run(["theorem_dbeta"], parameters={"theorem_dbeta": {"alpha": 0.5, "beta": 1.0}})


def test_default_suite_passes():
    reports = VerificationService().run()
    assert len(reports) == 21
    assert [report.name for report in reports if not report.passed] == []


def test_first_error_cancels_pending_checks(monkeypatch):
    started = []

    def failing():
        raise DomainError("need 0 < beta < alpha")

    def slow():
        started.append("slow")
        time.sleep(0.5)
        return check_classical_hardy(lambda y: math.exp(-y), 2.0, 1.0)

    def pending():
        started.append("pending")
        return check_classical_hardy(lambda y: math.exp(-y), 2.0, 1.0)

    checks = {"a.failing": failing, "b.slow": slow, "c.pending": pending}
    monkeypatch.setattr(VerificationService, "default_checks", lambda self, *args, **kwargs: checks)
    service = VerificationService({**load_defaults(), "workers": 1})
    with pytest.raises(DomainError):
        service.run()
    assert "pending" not in started


def test_supplied_grid_reaches_the_checks(monkeypatch, coarse_grid):
    seen = []
    real = verify_service.check_variable_hardy

    def spy(g, q, r, grid=None, slack=None):
        seen.append(grid)
        return real(g, q, r, grid, slack)

    monkeypatch.setattr(verify_service, "check_variable_hardy", spy)
    reports = VerificationService().run(["variable_hardy.constant"], grid=coarse_grid)
    assert reports[0].passed
    assert seen == [coarse_grid]

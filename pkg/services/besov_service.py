"""
Variable Gaussian Besov-Lipschitz norms: the mixed-norm seminorm, the
constant A_k(f) of the q = inf spaces, full norms and inclusion diagnostics.
"""

import logging
import math
from dataclasses import replace

import numpy as np
from scipy.special import gammaln

from config import DEFAULTS
from errors import DomainError
from models import (BOUND_FINITE_STABLE, BesovParams, MeasureKind, SeminormResult,
                    SupremumResult, VerificationReport)
from services.exponent_service import (discretize_on_grid, expansion_norm, haar_norm,
                                       luxemburg_rows)
from services.hermite_service import gauss_rule, hermite_design
from services.semigroup_service import poisson_derivative_multiplier, time_grid


def default_rule(dimension):
    n = DEFAULTS["gauss_points"] if dimension == 1 else DEFAULTS["gauss_points_2d"]
    return gauss_rule(dimension, n)


def describe(f, position=None):
    """A short label for a family member: h(nu) for eigenfunctions"""
    if len(f.coefficients) == 1:
        (index, value), = f.coefficients.items()
        return f"h{index}" if value == 1.0 else f"{value:g}*h{index}"
    return f"member[{position}]" if position is not None else f"expansion[{len(f.coefficients)} terms]"


def inner_norm_trace(f, k, p, times, rule=None):
    """g(t) = ||u^{(k)}(., t)||_{p(.),gamma_d} at each time, all Luxemburg solves batched"""
    times = np.asarray(times, dtype=float)
    if not f.coefficients:
        return np.zeros(times.size)
    rule = rule or default_rule(f.dimension)
    coefficients = f.values * poisson_derivative_multiplier(f.orders, times[:, None], k)
    samples = coefficients @ hermite_design(f.indices, rule.nodes).T
    return luxemburg_rows(samples, rule.weights, p(rule.nodes))


def grid_supremum(times, values):
    """
    Maximum of samples on a log grid, refined by a parabola through the three
    nodes around the discrete maximum in (log t, log value).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if not np.any(values > 0):
        return SupremumResult(0.0, float('nan'), False)
    i = int(np.argmax(values))
    if i == 0 or i == values.size - 1:
        return SupremumResult(float(values[i]), float(times[i]), True)
    left, mid, right = values[i - 1:i + 2]
    if min(left, right) <= 0:
        return SupremumResult(float(mid), float(times[i]), False)
    y0, y1, y2 = np.log([left, mid, right])
    curvature = y0 - 2.0 * y1 + y2
    if curvature >= 0:
        return SupremumResult(float(mid), float(times[i]), False)
    step = math.log(times[i + 1] / times[i])
    offset = 0.5 * step * (y0 - y2) / curvature
    peak = y1 - (y0 - y2) ** 2 / (8.0 * curvature)
    return SupremumResult(float(math.exp(peak)), float(times[i] * math.exp(offset)), False)


def besov_infty_constant(f, alpha, k, p, grid, rule=None):
    """A_k(f) = sup_t t^{k-alpha} ||u^{(k)}(., t)||_{p(.)}, flagged when the maximum sits on a grid end"""
    if not k > alpha:
        raise DomainError(f"k must exceed alpha, got k={k}, alpha={alpha}")
    times = grid.points
    trace = inner_norm_trace(f, k, p, times, rule)
    result = grid_supremum(times, times ** (k - alpha) * trace)
    if result.at_boundary:
        logging.warning(f"A_k supremum attained at the grid boundary t={result.maximizer:.3g}; widen the grid")
    return result


def _outer_norm(weighted, grid, q):
    return haar_norm(discretize_on_grid(weighted, grid, MeasureKind.HAAR), q)


def besov_seminorm(f, params):
    """
    || t^{k-alpha} ||u^{(k)}(., t)||_{p(.),gamma_d} ||_{q(.),dt/t}, with the q = inf branch as A_k(f).

    The residual compares the value against the same computation on every
    other grid point. A result that is infinite or moves by more than the
    refinement slack is reported as not in the space at this resolution.
    """
    grid = params.grid
    times = grid.points
    k, alpha = params.k, params.alpha
    trace = inner_norm_trace(f, k, params.p, times, params.rule)
    weighted = times ** (k - alpha) * trace
    maximizer, at_boundary = None, False
    if params.q.is_infinite:
        sup = grid_supremum(times, weighted)
        value, maximizer, at_boundary = sup.value, sup.maximizer, sup.at_boundary
        coarse = grid_supremum(times[::2], weighted[::2]).value if (grid.count - 1) % 2 == 0 else value
    else:
        value = _outer_norm(weighted, grid, params.q)
        coarse = value
        if (grid.count - 1) % 2 == 0:
            coarse = _outer_norm(weighted[::2], grid.coarsened(), params.q)
    if math.isfinite(value) and math.isfinite(coarse):
        residual = abs(value - coarse)
    else:
        residual = math.inf
    in_space = math.isfinite(value) and residual <= DEFAULTS["refinement_slack"] * max(value, 1e-300)
    if value == 0.0:
        in_space = True
    if not in_space:
        logging.info(f"Seminorm {value:.6g} unresolved (residual {residual:.3g}): not in the space at this resolution")
    return SeminormResult(value, times, trace, residual, in_space, maximizer, at_boundary)


def besov_norm(f, params):
    """||f||_{p(.),gamma_d} plus the seminorm (or A_k(f) when q is infinite)"""
    rule = params.rule or default_rule(f.dimension)
    lebesgue = expansion_norm(f, params.p, rule)
    seminorm = besov_seminorm(f, replace_rule(params, rule))
    if not seminorm.in_space and not math.isfinite(seminorm.value):
        return math.inf
    return lebesgue + seminorm.value


def replace_rule(params, rule):
    return BesovParams(params.alpha, params.p, params.q, params.grid, rule, params.k)


# eigenfunction closed forms

def eigen_seminorm_closed_form(order, alpha, k, q, lp_norm=1.0):
    """Seminorm of h_nu, |nu| = order, for constant q: a^alpha q^{-(k-alpha)} Gamma((k-alpha) q)^{1/q} ||h_nu||_p"""
    if order == 0:
        return 0.0
    a = math.sqrt(order)
    if math.isinf(q):
        return eigen_infty_constant_closed_form(order, alpha, k, lp_norm)
    m = k - alpha
    return a ** alpha * q ** (-m) * math.exp(gammaln(m * q) / q) * lp_norm


def eigen_infty_constant_closed_form(order, alpha, k, lp_norm=1.0):
    """A_k(h_nu) = a^alpha ((k - alpha)/e)^{k - alpha} ||h_nu||_p"""
    if order == 0:
        return 0.0
    a = math.sqrt(order)
    m = k - alpha
    return a ** alpha * (m / math.e) ** m * lp_norm


# inclusions

def _inclusion_holds(alpha1, q1, alpha2, q2, times):
    if alpha1 > alpha2:
        return True
    if alpha1 != alpha2:
        return False
    if q2.is_infinite:
        return True
    if q1.is_infinite:
        return False
    return bool(np.all(q1(times) <= q2(times) + 1e-15))


def inclusion_diagnostic(family, alpha1, q1, alpha2, q2, p, grid=None, rule=None,
                         extension=(), slack=None):
    """
    Ratios ||f||_{B^{alpha2}_{p,q2}} / ||f||_{B^{alpha1}_{p,q1}} over a family.

    When the inclusion hypothesis holds, certifies that the maximum is finite
    and moves by less than the slack when the family is extended. Otherwise
    the seminorm ratio of eigenfunctions is compared with the growth law
    |nu|^{(alpha2 - alpha1)/2} within 10%.
    """
    grid = grid or time_grid()
    slack = DEFAULTS["refinement_slack"] if slack is None else slack
    members = labelled(family)
    dimension = members[0][1].dimension if members else 1
    rule = rule or default_rule(dimension)
    first = BesovParams(alpha1, p, q1, grid, rule)
    second = BesovParams(alpha2, p, q2, grid, rule)
    params = {"alpha1": alpha1, "alpha2": alpha2, "q1": dict(q1.description), "q2": dict(q2.description),
              "p": dict(p.description), "grid": grid.to_dict()}
    if _inclusion_holds(alpha1, q1, alpha2, q2, grid.points):
        ratios = _norm_ratios(members, first, second)
        extended = ratios + _norm_ratios(labelled(extension), first, second)
        best = max(ratios, key=lambda item: item[1], default=("none", 0.0))
        best_extended = max(extended, key=lambda item: item[1], default=best)
        delta = abs(best_extended[1] - best[1]) / best[1] if best[1] > 0 else 0.0
        report = VerificationReport(
            "inclusion", params, best[1], BOUND_FINITE_STABLE, False, best[0], delta, slack,
            details={"extended_max": best_extended[1], "members": len(ratios)},
        )
    else:
        report = _reversed_growth(members, first, second, params, slack)
    return replace(report, passed=report.recompute_pass())


def labelled(family):
    labelled = []
    for position, member in enumerate(family):
        if isinstance(member, tuple):
            labelled.append(member)
        else:
            labelled.append((describe(member, position), member))
    return labelled


def _norm_ratios(members, first, second):
    ratios = []
    for label, f in members:
        denominator = besov_norm(f, first)
        numerator = besov_norm(f, second)
        if denominator == 0.0:
            continue
        ratios.append((label, numerator / denominator))
    return ratios


def _reversed_growth(members, first, second, params, slack):
    eigen = [(label, f) for label, f in members if len(f.coefficients) == 1 and f.max_order > 0]
    eigen.sort(key=lambda item: item[1].max_order)
    exponent = (second.alpha - first.alpha) / 2.0
    deviations = []
    growth = []
    base = None
    for label, f in eigen:
        ratio = besov_seminorm(f, second).value / besov_seminorm(f, first).value
        order = f.max_order
        if base is None:
            base = (order, ratio)
        predicted = (order / base[0]) ** exponent
        measured = ratio / base[1]
        growth.append({"member": label, "order": order, "measured": measured, "predicted": predicted})
        deviations.append(abs(measured / predicted - 1.0))
    delta = max(deviations, default=0.0)
    top = growth[-1]["measured"] if growth else 0.0
    flags = ("reversed",) if growth else ("reversed", "vacuous")
    return VerificationReport(
        "inclusion", params, top, BOUND_FINITE_STABLE, False, growth[-1]["member"] if growth else None,
        delta, 0.10, flags=flags, details={"growth": growth, "growth_exponent": exponent},
    )

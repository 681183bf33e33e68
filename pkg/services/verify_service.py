"""
The inequality harness.

Every check returns a VerificationReport whose pass flag is derived from its
stored fields. Boundedness statements without a named constant are
certified as "finite+stable": the measured extremal ratio is finite and
moves by less than the slack under grid refinement and family extension.
"""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import replace

import numpy as np
from scipy import integrate

from config import DEFAULTS, load_defaults
from errors import DimensionMismatchError, DomainError
from models import (BOUND_FINITE_STABLE, BesovParams, DiscretizedFunction, HermiteExpansion,
                    MeasureKind, VerificationReport)
from services.besov_service import (besov_infty_constant, besov_seminorm, default_rule, describe,
                                    eigen_seminorm_closed_form, inclusion_diagnostic, inner_norm_trace,
                                    labelled)
from services.exponent_service import (check_zero_infinity, constant_exponent, discretize_expansion,
                                       discretize_on_grid, expansion_norm, haar_norm, luxemburg_norm,
                                       rational_decay_exponent)
from services.hermite_service import gauss_rule, multi_indices, multi_indices_up_to
from services.operator_service import (bessel_derivative_integral, bessel_derivative_spectral,
                                       bessel_potential_spectral, derivative_difference)
from services.semigroup_service import (MAX_STABLE_ORDER, poisson_apply_spectral,
                                        poisson_derivative, stable_derivative_mass, time_grid)


def _finish(report):
    passed = report.recompute_pass()
    logging.info(f"Check {report.name}: ratio={report.ratio:.6g} bound={report.bound} "
                 f"delta={report.stability_delta:.3g} -> {'pass' if passed else 'FAIL'}")
    return replace(report, passed=passed)


def _relative_change(before, after):
    if not (math.isfinite(before) and math.isfinite(after)):
        return math.inf
    if before == 0.0:
        return 0.0 if after == 0.0 else math.inf
    return abs(after - before) / abs(before)


def _unresolved(delta, slack):
    return ("unresolved",) if delta > slack else ()


# test families

def build_family(dimension=1, max_order=None, random_count=None, random_order=None, seed=None,
                 min_order=0):
    """
    The default test family: every h_nu with min_order <= |nu| <= max_order, then
    seeded random expansions with standard-normal coefficients.
    """
    max_order = DEFAULTS["family_max_order"] if max_order is None else max_order
    random_count = DEFAULTS["family_random_count"] if random_count is None else random_count
    random_order = DEFAULTS["family_random_order"] if random_order is None else random_order
    seed = DEFAULTS["seed"] if seed is None else seed
    family = []
    for n in range(min_order, max_order + 1):
        for index in multi_indices(dimension, n):
            family.append((f"h{index}", HermiteExpansion.basis(index)))
    rng = np.random.default_rng(seed)
    indices = multi_indices_up_to(dimension, random_order)
    for i in range(random_count):
        coefficients = rng.standard_normal(len(indices))
        family.append((f"random[{i}]", HermiteExpansion(dimension, dict(zip(indices, coefficients)))))
    logging.debug(f"Family d={dimension}: {len(family)} members (seed {seed})")
    return family


def extension_family(dimension=1, low=None, high=None):
    """Eigenfunctions beyond the base family, used for the family-extension test"""
    low = DEFAULTS["family_max_order"] + 1 if low is None else low
    high = DEFAULTS["family_extension_order"] if high is None else high
    return [(f"h{index}", HermiteExpansion.basis(index))
            for n in range(low, high + 1) for index in multi_indices(dimension, n)]


# classical and variable Hardy inequalities

def _quad(fn, a, b, breakpoints=()):
    """quad over [a, b] (b may be inf) split at the breakpoints inside; returns (value, error)"""
    cuts = [a] + sorted(x for x in breakpoints if a < x < b) + [b]
    total, error = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            value, err = integrate.quad(fn, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=200)
            total += value
            error += err
    return total, error


def _converged(value, error):
    return math.isfinite(value) and error <= 1e-6 * max(1.0, abs(value))


def check_classical_hardy(phi, p, r, breakpoints=(), slack=None):
    """
    The classical Hardy inequalities

        int_0^inf (int_0^x phi)^p x^{-r-1} dx <= (p/r)^p int_0^inf (y phi(y))^p y^{-r-1} dy
        int_0^inf (int_x^inf phi)^p x^{r-1} dx <= (p/r)^p int_0^inf (y phi(y))^p y^{r-1} dy

    by nested adaptive quadrature. A divergent right-hand side or phi = 0 is a
    flagged vacuous pass.
    """
    if p < 1 or not r > 0:
        raise DomainError(f"Hardy inequalities need p >= 1 and r > 0, got p={p}, r={r}")
    slack = DEFAULTS["quadrature_slack"] if slack is None else slack
    points = tuple(breakpoints) + (1.0,)
    constant = (p / r) ** p
    params = {"p": p, "r": r, "breakpoints": list(breakpoints)}

    def head(x):
        return _quad(phi, 0.0, x, points)[0]

    def tail(x):
        return _quad(phi, x, math.inf, points)[0]

    sides = {
        "lhs_zero": _quad(lambda x: head(x) ** p * x ** (-r - 1.0), 0.0, math.inf, points),
        "rhs_zero": _quad(lambda y: (y * phi(y)) ** p * y ** (-r - 1.0), 0.0, math.inf, points),
        "lhs_infinity": _quad(lambda x: tail(x) ** p * x ** (r - 1.0), 0.0, math.inf, points),
        "rhs_infinity": _quad(lambda y: (y * phi(y)) ** p * y ** (r - 1.0), 0.0, math.inf, points),
    }
    details = {name: value for name, (value, _) in sides.items()}
    flags = []
    ratios = []
    for lhs, rhs in (("lhs_zero", "rhs_zero"), ("lhs_infinity", "rhs_infinity")):
        left, right = sides[lhs][0], sides[rhs][0]
        if not _converged(*sides[rhs]):
            flags.append(f"divergent_{rhs}")
            continue
        if right == 0.0 and left == 0.0:
            continue
        if not _converged(*sides[lhs]):
            ratios.append(math.inf)
            continue
        ratios.append(left / right if right > 0 else math.inf)
    if not ratios:
        flags.append("vacuous")
    report = VerificationReport(
        "classical_hardy", params, max(ratios, default=0.0), constant * (1.0 + slack), False,
        flags=tuple(flags), details=details,
    )
    return _finish(report)


def _sample(g, times):
    try:
        values = np.asarray(g(times), dtype=float)
        if values.shape == times.shape:
            return values
    except (TypeError, ValueError):
        pass
    return np.array([float(g(t)) for t in times])


def _hardy_sides(g, q, r, grid):
    times = grid.points
    pieces = np.array([_quad(g, a, b)[0] for a, b in zip(times[:-1], times[1:])])
    head = _quad(g, 0.0, times[0])[0] + np.concatenate([[0.0], np.cumsum(pieces)])
    tail = _quad(g, times[-1], math.inf)[0] + np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
    values = _sample(g, times)

    def norm(samples):
        return haar_norm(discretize_on_grid(samples, grid, MeasureKind.HAAR), q)

    return {
        "lhs_zero": norm(times ** -r * head),
        "rhs_zero": norm(times ** (1.0 - r) * values),
        "lhs_infinity": norm(times ** r * tail),
        "rhs_infinity": norm(times ** (1.0 + r) * values),
    }


def _hardy_ratio(sides):
    ratios = []
    for lhs, rhs in (("lhs_zero", "rhs_zero"), ("lhs_infinity", "rhs_infinity")):
        if sides[rhs] == 0.0:
            if sides[lhs] != 0.0:
                ratios.append(math.inf)
            continue
        ratios.append(sides[lhs] / sides[rhs])
    return max(ratios) if ratios else None


def check_variable_hardy(g, q, r, grid=None, slack=None):
    """
    Hardy inequalities for the exponent q(.) against dt/t:
    ||t^{-r} int_0^t g||_{q,mu} <= C ||y^{1-r} g||_{q,mu} and the mirror
    ||t^{r} int_t^inf g||_{q,mu} <= C ||y^{1+r} g||_{q,mu}. The certificate is a
    finite ratio that is stable when the grid is refined twice over.
    """
    if not r > 0:
        raise DomainError(f"need r > 0, got {r}")
    if not q.is_infinite and q.p_minus < 1.0:
        raise DomainError(f"q must have q_- >= 1, got {q.p_minus}")
    grid = grid or time_grid()
    slack = DEFAULTS["refinement_slack"] if slack is None else slack
    sides = _hardy_sides(g, q, r, grid)
    params = {"q": dict(q.description), "r": r, "grid": grid.to_dict()}
    a_zero, a_inf = check_zero_infinity(q, grid.points)
    details = dict(sides, zero_infinity_constants=[a_zero, a_inf])
    ratio = _hardy_ratio(sides)
    if ratio is None:
        return _finish(VerificationReport("variable_hardy", params, 0.0, BOUND_FINITE_STABLE, False,
                                          flags=("vacuous",), details=details))
    refined = _hardy_ratio(_hardy_sides(g, q, r, grid.refined(2)))
    delta = _relative_change(ratio, refined if refined is not None else 0.0)
    details["refined_ratio"] = refined
    return _finish(VerificationReport("variable_hardy", params, ratio, BOUND_FINITE_STABLE, False,
                                      stability_delta=delta, slack=slack, flags=_unresolved(delta, slack),
                                      details=details))


# norm-conjugate formula and Holder's inequality

def check_norm_conjugate(f, p, candidates=16, seed=None, lower_bound=0.45):
    """
    Lower estimate of the dual norm sup{int |f g| : ||g||_{p'} <= 1} from the
    extremal candidate |f|^{p(.)-1} and seeded perturbations of it, against
    the band [lower_bound, 2] * ||f||. For constant p the estimate must equal
    ||f||_p.
    """
    conjugate = p.conjugate()
    seed = DEFAULTS["seed"] if seed is None else seed
    params = {"p": dict(p.description), "candidates": candidates, "seed": seed}
    norm = luxemburg_norm(f, p)
    if norm == 0.0:
        return _finish(VerificationReport("norm_conjugate", params, 0.0, 2.0, False, lower_bound=lower_bound,
                                          flags=("vacuous",), details={"norm": 0.0, "estimate": 0.0}))
    exponents = p(f.points)
    rng = np.random.default_rng(seed)
    base = np.where(f.values > 0, f.values ** (exponents - 1.0), 0.0)
    trials = [base] + [base * np.exp(0.25 * rng.standard_normal(base.size)) for _ in range(candidates)]
    estimate = 0.0
    for trial in trials:
        scale = luxemburg_norm(f.with_values(trial), conjugate)
        if scale > 0:
            estimate = max(estimate, float(np.dot(f.weights, f.values * trial)) / scale)
    flags = ()
    details = {"norm": norm, "estimate": estimate}
    if p.is_constant:
        details["duality_gap"] = abs(estimate - norm)
        if abs(estimate - norm) > 1e-6 * max(1.0, norm):
            flags = ("failed",)
    return _finish(VerificationReport("norm_conjugate", params, estimate / norm, 2.0, False,
                                      lower_bound=lower_bound, flags=flags, details=details))


def check_holder(f, g, q, r):
    """||f g||_{p} <= 2 ||f||_{q} ||g||_{r} with 1/p = 1/q + 1/r pointwise"""
    if f.values.shape != g.values.shape or not np.allclose(f.weights, g.weights):
        raise DimensionMismatchError(f.values.shape, g.values.shape, what="sample vector")
    p = q.harmonic(r)
    params = {"q": dict(q.description), "r": dict(r.description)}
    product = DiscretizedFunction(f.values * g.values, f.weights, f.points, f.measure, f.tail_step)
    lhs = luxemburg_norm(product, p)
    rhs = luxemburg_norm(f, q) * luxemburg_norm(g, r)
    details = {"lhs": lhs, "rhs": rhs}
    if rhs == 0.0:
        return _finish(VerificationReport("holder", params, 0.0, 2.0, False, flags=("vacuous",), details=details))
    return _finish(VerificationReport("holder", params, lhs / rhs, 2.0, False, details=details))


# decay of Poisson derivatives

def _kdecay_constants(f, k, p, grid, rule, norm):
    times = grid.points
    trace = inner_norm_trace(f, k, p, times, rule)
    running_min = np.minimum.accumulate(trace)
    with np.errstate(divide='ignore', invalid='ignore'):
        pairs = np.where(running_min[:-1] > 0, trace[1:] / running_min[:-1], 0.0)
    monotone = float(pairs.max()) if pairs.size else 0.0
    decay = float(np.max(times ** k * trace)) / norm
    return monotone, decay


def check_kdecay(f, k, p, grid=None, rule=None, slack=None):
    """
    Decay of Poisson derivatives: max over s < t of ||u^{(k)}(t)|| / ||u^{(k)}(s)||
    and sup_t t^k ||u^{(k)}(t)|| / ||f||, both finite and refinement-stable.
    The reported ratio is the first; the second is in the details.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    grid = grid or time_grid()
    slack = DEFAULTS["refinement_slack"] if slack is None else slack
    rule = rule or default_rule(f.dimension)
    params = {"k": k, "p": dict(p.description), "grid": grid.to_dict(), "expansion": f.to_dict()}
    if poisson_derivative(f, 1.0, k).is_zero:
        return _finish(VerificationReport("kdecay", params, 0.0, BOUND_FINITE_STABLE, False,
                                          flags=("vacuous",)))
    norm = expansion_norm(f, p, rule)
    monotone, decay = _kdecay_constants(f, k, p, grid, rule, norm)
    fine_monotone, fine_decay = _kdecay_constants(f, k, p, grid.refined(2), rule, norm)
    delta = max(_relative_change(monotone, fine_monotone), _relative_change(decay, fine_decay))
    details = {"decay_constant": decay, "refined_monotone": fine_monotone, "refined_decay": fine_decay}
    return _finish(VerificationReport("kdecay", params, monotone, BOUND_FINITE_STABLE, False,
                                      stability_delta=delta, slack=slack, flags=_unresolved(delta, slack),
                                      details=details))


def _difference_ratios(members, k, n, p, s_values, t_values, rule):
    best = ("none", 0.0)
    for label, f in members:
        if f.is_zero:
            continue
        for t in t_values:
            denominator = expansion_norm(poisson_derivative(f, t, k + n), p, rule)
            if denominator == 0.0:
                continue
            for s in s_values:
                numerator = expansion_norm(derivative_difference(f, t, s, k, n), p, rule)
                ratio = numerator / (s ** k * denominator)
                if ratio > best[1]:
                    best = (f"{label}@s={s:.4g},t={t:.4g}", ratio)
    return best


def check_forward_difference_bound(family, k=2, n=1, p=None, s_count=9, t_count=9, rule=None, slack=None):
    """
    ||Delta_s^k(u^{(n)}, t)||_{p(.)} / (s^k ||u^{(k+n)}(., t)||_{p(.)}) over the family,
    s in [1e-3, 1] and t in [0.1, 5]; refinement doubles both sample sets.
    """
    p = p or constant_exponent(2.0)
    slack = DEFAULTS["refinement_slack"] if slack is None else slack
    members = labelled(family)
    rule = rule or default_rule(members[0][1].dimension if members else 1)
    params = {"k": k, "n": n, "p": dict(p.description), "members": len(members)}

    def sweep(s_points, t_points):
        return _difference_ratios(members, k, n, p, np.geomspace(1e-3, 1.0, s_points),
                                  np.geomspace(0.1, 5.0, t_points), rule)

    witness, ratio = sweep(s_count, t_count)
    if ratio == 0.0:
        return _finish(VerificationReport("forward_difference_bound", params, 0.0, BOUND_FINITE_STABLE, False,
                                          flags=("vacuous",)))
    _, refined = sweep(2 * s_count - 1, 2 * t_count - 1)
    delta = _relative_change(ratio, refined)
    return _finish(VerificationReport("forward_difference_bound", params, ratio, BOUND_FINITE_STABLE, False,
                                      witness, delta, slack, flags=_unresolved(delta, slack),
                                      details={"refined_ratio": refined}))


def check_stable_derivative_mass(orders=None, times=None, slack=None, scaling_tol=1e-10):
    """
    C_k = sup_t t^k int |d^k mu_t / dt^k|(ds) for each order, with the exact
    t^{-k} scaling of the mass checked to scaling_tol.
    """
    orders = tuple(range(1, MAX_STABLE_ORDER + 1)) if orders is None else tuple(orders)
    times = np.geomspace(0.01, 100.0, 9) if times is None else np.asarray(times, dtype=float)
    slack = DEFAULTS["refinement_slack"] if slack is None else slack
    constants = {}
    scaling_error = 0.0
    delta = 0.0
    for k in orders:
        unit = stable_derivative_mass(1.0, k)
        scaled = np.array([t ** k * stable_derivative_mass(t, k) for t in times])
        constants[str(k)] = float(scaled.max())
        scaling_error = max(scaling_error, float(np.max(np.abs(scaled / unit - 1.0))))
        fine = stable_derivative_mass(1.0, k, ratio=math.sqrt(2.0))
        delta = max(delta, _relative_change(unit, fine))
    flags = ("failed",) if scaling_error > scaling_tol else ()
    flags += _unresolved(delta, slack)
    params = {"orders": list(orders), "times": times.tolist()}
    ratio = max(constants.values(), default=0.0)
    return _finish(VerificationReport("stable_derivative_mass", params, ratio, BOUND_FINITE_STABLE, False,
                                      max(constants, key=constants.get, default=None), delta, slack,
                                      flags=flags, details={"constants": constants, "scaling_error": scaling_error}))


def check_lp_boundedness(family, operator="bessel_potential", parameter=1.0, p=None, rule=None, slack=None):
    """
    ||T f||_{p(.)} / ||f||_{p(.)} over the family for T = J_beta (parameter beta)
    or T = P_t (parameter t); refinement doubles the quadrature points per axis.
    """
    p = p or constant_exponent(2.0)
    slack = DEFAULTS["refinement_slack"] if slack is None else slack
    members = labelled(family)
    dimension = members[0][1].dimension if members else 1
    if operator == "bessel_potential":
        def apply(f):
            return bessel_potential_spectral(f, parameter)
    elif operator == "poisson":
        def apply(f):
            return poisson_apply_spectral(f, parameter)
    else:
        raise DomainError(f"unknown operator {operator!r}; expected bessel_potential or poisson")
    rule = rule or default_rule(dimension)
    fine_rule = gauss_rule(dimension, min(2 * int(round(rule.size ** (1.0 / dimension))), 200))

    def sweep(current):
        best = ("none", 0.0)
        for label, f in members:
            norm = expansion_norm(f, p, current)
            if norm == 0.0:
                continue
            ratio = expansion_norm(apply(f), p, current) / norm
            if ratio > best[1]:
                best = (label, ratio)
        return best

    witness, ratio = sweep(rule)
    params = {"operator": operator, "parameter": parameter, "p": dict(p.description), "members": len(members)}
    if ratio == 0.0:
        return _finish(VerificationReport(f"lp_boundedness.{operator}", params, 0.0, BOUND_FINITE_STABLE, False,
                                          flags=("vacuous",)))
    refined = sweep(fine_rule)[1]
    delta = _relative_change(ratio, refined)
    return _finish(VerificationReport(f"lp_boundedness.{operator}", params, ratio, BOUND_FINITE_STABLE, False,
                                      witness, delta, slack, flags=_unresolved(delta, slack),
                                      details={"refined_ratio": refined}))


# boundedness theorems

def _besov_parts(f, alpha, k, p, q, grid, rule):
    """(||f||_p, seminorm or A_k) at smoothness alpha with a fixed k"""
    lebesgue = expansion_norm(f, p, rule)
    if q is None or q.is_infinite:
        return lebesgue, besov_infty_constant(f, alpha, k, p, grid, rule).value
    params = BesovParams(alpha, p, q, grid, rule, k)
    result = besov_seminorm(f, params)
    return lebesgue, (result.value if math.isfinite(result.value) else math.inf)


def _closed_form_ratio(order, alpha, target_alpha, k, q, multiplier):
    """Eigenfunction norm ratio for constant q: the ||h_nu||_p factors cancel"""
    q_value = math.inf if q is None or q.is_infinite else float(q(np.array([1.0]))[0])
    before = 1.0 + eigen_seminorm_closed_form(order, alpha, k, q_value)
    after = multiplier * (1.0 + eigen_seminorm_closed_form(order, target_alpha, k, q_value))
    return after / before


class _TheoremCertificate:
    """
    Shared engine of the three boundedness theorems: the maximum over a family
    of ||T f||_{target} / ||f||_{source}, with refinement and extension deltas
    and an eigenfunction closed-form cross-check.
    """

    def __init__(self, name, transform, multiplier, alpha, target_alpha, k, p, q, grid, rule, slack):
        self.name = name
        self.transform = transform
        self.multiplier = multiplier
        self.alpha = alpha
        self.target_alpha = target_alpha
        self.k = k
        self.p = p
        self.q = q
        self.grid = grid
        self.rule = rule
        self.slack = slack

    def ratio(self, f, grid):
        lebesgue, seminorm = _besov_parts(f, self.alpha, self.k, self.p, self.q, grid, self.rule)
        image = self.transform(f)
        image_lebesgue, image_seminorm = _besov_parts(image, self.target_alpha, self.k, self.p, self.q, grid,
                                                      self.rule)
        denominator = lebesgue + seminorm
        if denominator == 0.0:
            return None
        return (image_lebesgue + image_seminorm) / denominator

    def sweep(self, members, grid):
        ratios = {}
        for label, f in members:
            value = self.ratio(f, grid)
            if value is not None:
                ratios[label] = value
        return ratios

    def run(self, family, extension, params):
        members = labelled(family)
        ratios = self.sweep(members, self.grid)
        if not ratios:
            return _finish(VerificationReport(self.name, params, 0.0, BOUND_FINITE_STABLE, False,
                                              flags=("vacuous",)))
        witness = max(ratios, key=ratios.get)
        best = ratios[witness]
        refined = max(self.sweep(members, self.grid.refined(2)).values())
        extended = max([best] + list(self.sweep(labelled(extension), self.grid).values()))
        refinement_delta = _relative_change(best, refined)
        extension_delta = _relative_change(best, extended)
        delta = max(refinement_delta, extension_delta)
        flags = list(_unresolved(delta, self.slack))
        details = {"refined_max": refined, "extended_max": extended,
                   "refinement_delta": refinement_delta, "extension_delta": extension_delta}
        mismatch = self.closed_form_mismatch(members, ratios)
        if mismatch is not None:
            details["closed_form_error"] = mismatch
            if mismatch > DEFAULTS["closed_form_tol"]:
                flags.append("failed")
        return _finish(VerificationReport(self.name, params, best, BOUND_FINITE_STABLE, False, witness,
                                          delta, self.slack, flags=tuple(flags), details=details))

    def closed_form_mismatch(self, members, ratios):
        if self.q is not None and not self.q.is_infinite and not self.q.is_constant:
            return None
        errors = []
        for label, f in members:
            if len(f.coefficients) != 1 or label not in ratios:
                continue
            order = f.max_order
            a = math.sqrt(order)
            expected = _closed_form_ratio(order, self.alpha, self.target_alpha, self.k, self.q,
                                          self.multiplier(a))
            errors.append(abs(ratios[label] / expected - 1.0))
        return max(errors) if errors else None


def _theorem_setup(family, grid, rule, slack):
    members = labelled(family)
    dimension = members[0][1].dimension if members else 1
    return (grid or time_grid(), rule or default_rule(dimension),
            DEFAULTS["refinement_slack"] if slack is None else slack)


def check_theorem_jbeta_infty(family, alpha, beta, p, grid=None, rule=None, k=None, extension=(), slack=None):
    """J_beta bounded from B^alpha_{p,inf} into B^{alpha+beta}_{p,inf}; k defaults to the smallest integer > alpha + beta"""
    if not beta > 0 or alpha < 0:
        raise DomainError(f"need alpha >= 0 and beta > 0, got alpha={alpha}, beta={beta}")
    k = math.floor(alpha + beta) + 1 if k is None else k
    if not k > alpha + beta:
        raise DomainError(f"k must exceed alpha + beta, got k={k}")
    grid, rule, slack = _theorem_setup(family, grid, rule, slack)
    engine = _TheoremCertificate(
        "theorem_jbeta_infty", lambda f: bessel_potential_spectral(f, beta), lambda a: (1.0 + a) ** -beta,
        alpha, alpha + beta, k, p, None, grid, rule, slack)
    params = {"alpha": alpha, "beta": beta, "k": k, "p": dict(p.description), "grid": grid.to_dict()}
    return engine.run(family, extension, params)


def check_theorem_jbeta(family, alpha, beta, p, q, grid=None, rule=None, k=None, extension=(), slack=None):
    """J_beta bounded from B^alpha_{p,q} into B^{alpha+beta}_{p,q}"""
    if not beta > 0 or alpha < 0:
        raise DomainError(f"need alpha >= 0 and beta > 0, got alpha={alpha}, beta={beta}")
    k = math.floor(alpha + beta) + 1 if k is None else k
    if not k > alpha + beta:
        raise DomainError(f"k must exceed alpha + beta, got k={k}")
    grid, rule, slack = _theorem_setup(family, grid, rule, slack)
    engine = _TheoremCertificate(
        "theorem_jbeta", lambda f: bessel_potential_spectral(f, beta), lambda a: (1.0 + a) ** -beta,
        alpha, alpha + beta, k, p, q, grid, rule, slack)
    params = {"alpha": alpha, "beta": beta, "k": k, "p": dict(p.description), "q": dict(q.description),
              "grid": grid.to_dict()}
    return engine.run(family, extension, params)


def check_theorem_dbeta(family, alpha, beta, p, q, grid=None, rule=None, k=None, extension=(), slack=None):
    """
    D^beta bounded from B^alpha_{p,q} into B^{alpha-beta}_{p,q}, 0 < beta < alpha.

    D^beta runs through its integral representation; each image is checked
    against the spectral multiplier.
    """
    if not 0 < beta < alpha:
        raise DomainError(f"the derivative theorem needs 0 < beta < alpha, got alpha={alpha}, beta={beta}")
    k = math.floor(alpha) + 1 if k is None else k
    if not k > alpha:
        raise DomainError(f"k must exceed alpha, got k={k}")
    grid, rule, slack = _theorem_setup(family, grid, rule, slack)
    spectral_gap = [0.0]

    def transform(f):
        image = bessel_derivative_integral(f, beta)
        reference = bessel_derivative_spectral(f, beta)
        if f.coefficients:
            scale = max(1.0, float(np.max(np.abs(reference.values))))
            spectral_gap[0] = max(spectral_gap[0], float(np.max(np.abs(image.values - reference.values))) / scale)
        return image

    engine = _TheoremCertificate(
        "theorem_dbeta", transform, lambda a: (1.0 + a) ** beta,
        alpha, alpha - beta, k, p, q, grid, rule, slack)
    params = {"alpha": alpha, "beta": beta, "k": k, "p": dict(p.description), "q": dict(q.description),
              "grid": grid.to_dict()}
    report = engine.run(family, extension, params)
    details = dict(report.details, spectral_gap=spectral_gap[0])
    flags = report.flags
    if spectral_gap[0] > 1e-6 and "failed" not in flags:
        flags = flags + ("failed",)
    return _finish(replace(report, details=details, flags=flags))


# the suite

class VerificationService:
    """
    Runs named checks concurrently and aggregates the reports in name order.

    The default suite covers every check at the shipped parameters; a run
    configuration may restrict it to a subset of names.
    """

    def __init__(self, defaults=None):
        self.defaults = dict(defaults) if defaults is not None else load_defaults()

    def default_checks(self, dimension=None, refine=1, parameters=None, grid=None):
        """
        Name -> zero-argument callable for every check. `parameters` may move the
        (alpha, beta) of the theorem checks, keyed by check name. A supplied
        grid replaces the defaults grid and is used as given.
        """
        d = self.defaults
        parameters = parameters or {}

        def levels(name, alpha, beta):
            chosen = parameters.get(name, {})
            return float(chosen.get("alpha", alpha)), float(chosen.get("beta", beta))

        dimension = d["dimension"] if dimension is None else dimension
        if grid is None:
            grid = time_grid(d["t_min"], d["t_max"], (d["t_count"] - 1) * int(refine) + 1)
        family = build_family(dimension, d["family_max_order"], d["family_random_count"],
                              d["family_random_order"], d["seed"])
        extension = extension_family(dimension, d["family_max_order"] + 1, d["family_extension_order"])
        eigen = [member for member in family if not member[0].startswith("random")]
        two = constant_exponent(2.0)
        q_two = constant_exponent(2.0, MeasureKind.HAAR)
        q_four = constant_exponent(4.0, MeasureKind.HAAR)
        p_var = rational_decay_exponent(2.0, 1.0, 2.0)
        q_var = rational_decay_exponent(2.0, 1.0, 1.0, shift=1.0, domain=MeasureKind.HAAR)
        rule = default_rule(dimension)
        h1 = HermiteExpansion.basis((1,) + (0,) * (dimension - 1))
        mixed = HermiteExpansion(dimension, {index: 1.0 for index in multi_indices_up_to(dimension, 9)})
        f1 = discretize_expansion(h1, rule)
        ones = f1.with_values(np.ones(f1.values.size))

        return {
            "classical_hardy.exp": lambda: check_classical_hardy(lambda y: math.exp(-y), 2.0, 1.0),
            "classical_hardy.ramp": lambda: check_classical_hardy(lambda y: y if y <= 1.0 else 0.0, 1.0, 1.0,
                                                                  breakpoints=(1.0,)),
            "variable_hardy.constant": lambda: check_variable_hardy(lambda y: y ** 2 * np.exp(-y), q_two, 1.0,
                                                                    grid),
            "variable_hardy.variable": lambda: check_variable_hardy(lambda y: y * np.exp(-y), q_var, 0.5, grid),
            "norm_conjugate.constant": lambda: check_norm_conjugate(f1, two, seed=d["seed"]),
            "norm_conjugate.variable": lambda: check_norm_conjugate(f1, p_var, seed=d["seed"]),
            "holder.cauchy_schwarz": lambda: check_holder(f1, f1, two, two),
            "holder.stress": lambda: check_holder(f1, ones, two, constant_exponent(100.0)),
            "kdecay.eigen": lambda: check_kdecay(HermiteExpansion.basis((4,) + (0,) * (dimension - 1)), 1, two,
                                                 grid, rule),
            "kdecay.mixed": lambda: check_kdecay(mixed, 2, p_var, grid, rule),
            "stable_derivative_mass": lambda: check_stable_derivative_mass(),
            "forward_difference_bound": lambda: check_forward_difference_bound(family, 2, 1, p_var, rule=rule),
            "lp_boundedness.bessel_potential": lambda: check_lp_boundedness(family, "bessel_potential", 1.0,
                                                                            p_var, rule),
            "lp_boundedness.poisson": lambda: check_lp_boundedness(family, "poisson", 0.5, p_var, rule),
            "theorem_jbeta_infty": lambda: check_theorem_jbeta_infty(
                family, *levels("theorem_jbeta_infty", 0.5, 1.0), two, grid, rule, extension=extension),
            "theorem_jbeta": lambda: check_theorem_jbeta(
                family, *levels("theorem_jbeta", 0.5, 0.5), two, q_two, grid, rule, extension=extension),
            "theorem_jbeta.variable": lambda: check_theorem_jbeta(
                family, *levels("theorem_jbeta.variable", 0.5, 0.5), p_var, q_var, grid, rule, extension=extension),
            "theorem_dbeta": lambda: check_theorem_dbeta(
                family, *levels("theorem_dbeta", 1.5, 0.5), two, q_two, grid, rule, extension=extension),
            "inclusion.alpha": lambda: inclusion_diagnostic(eigen, 1.0, q_two, 0.5, q_two, two, grid, rule,
                                                            extension),
            "inclusion.q": lambda: inclusion_diagnostic(eigen, 0.5, q_two, 0.5, q_four, two, grid, rule, extension),
            "inclusion.reversed": lambda: inclusion_diagnostic(_square_orders(dimension), 0.5, q_two, 1.0, q_two,
                                                               two, grid, rule),
        }

    def run(self, names=None, dimension=None, refine=1, parameters=None, grid=None):
        """Run the named checks (all by default); the first error cancels the checks not yet started"""
        checks = self.default_checks(dimension, refine, parameters, grid)
        selected = sorted(checks) if names is None else sorted(names)
        unknown = [name for name in selected if name not in checks]
        if unknown:
            raise DomainError(f"unknown checks: {', '.join(unknown)}")
        logging.info(f"Running {len(selected)} checks on {self.defaults['workers']} workers")
        with ThreadPoolExecutor(max_workers=max(1, int(self.defaults["workers"]))) as pool:
            futures = {pool.submit(checks[name]): name for name in selected}
            results = {}
            try:
                for future in as_completed(futures):
                    results[futures[future]] = future.result()
            except Exception as e:
                logging.error(f"Check {futures[future]} failed: {e}")
                pool.shutdown(wait=False, cancel_futures=True)
                raise
        return [_named(name, results[name]) for name in selected]


def _named(name, report):
    return replace(report, name=name)


def _square_orders(dimension):
    """Eigenfunctions with |nu| in {1, 4, 9, 16, 25} for the growth-law check"""
    members = [HermiteExpansion.basis((n,) + (0,) * (dimension - 1)) for n in (1, 4, 9, 16, 25)]
    return [(describe(f), f) for f in members]

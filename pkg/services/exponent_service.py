"""
Variable exponents, class-membership certificates, the modular and
Luxemburg norms against gamma_d, the Haar measure dt/t and flat dt.
"""

import logging
import math

import numpy as np

from errors import ConfigError, DomainError, NumericalError
from models import (DiscretizedFunction, ExponentFunction, ExponentKind,
                    LogHolderConstants, MeasureKind)
from services.hermite_service import evaluate_on, expansion_values

BRACKET_STEPS = 64
BISECTION_RTOL = 1e-13


def _radius(x):
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1:
        return np.abs(x)
    return np.linalg.norm(x, axis=1)


def constant_exponent(value, domain=MeasureKind.GAUSSIAN):
    value = float(value)
    if math.isinf(value):
        return ExponentFunction(ExponentKind.INFINITE, domain, None, math.inf, math.inf, math.inf, math.inf,
                                {"kind": "constant", "value": "inf"})
    if value < 1.0:
        raise DomainError(f"exponents must be >= 1, got {value}")
    return ExponentFunction(ExponentKind.CONSTANT, domain, lambda x: value, value, value, value,
                            value if domain is MeasureKind.HAAR else None,
                            {"kind": "constant", "value": value})


def rational_decay_exponent(p_inf, amplitude, power, shift=math.e, domain=MeasureKind.GAUSSIAN):
    """p(x) = p_inf + A / (shift + |x|)^power"""
    if shift <= 0 or power < 0:
        raise DomainError(f"rational decay needs shift > 0 and power >= 0, got {shift}, {power}")
    at_origin = p_inf + amplitude / shift ** power
    p_minus, p_plus = sorted((p_inf, at_origin))
    if p_minus < 1.0:
        raise DomainError(f"exponent drops below 1 (p_- = {p_minus})")

    def evaluate(x):
        return p_inf + amplitude / (shift + _radius(x)) ** power

    return ExponentFunction(
        ExponentKind.RATIONAL_DECAY, domain, evaluate, p_minus, p_plus, p_inf,
        at_origin if domain is MeasureKind.HAAR else None,
        {"kind": "rational_decay", "p_inf": p_inf, "A": amplitude, "power": power, "shift": shift},
    )


def table_exponent(radii, values, domain=MeasureKind.GAUSSIAN):
    """Piecewise-linear interpolation in |x| (or t), constant beyond the table"""
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    if radii.shape != values.shape or radii.size < 1:
        raise DomainError("table exponent needs matching, non-empty points and values")
    if np.any(np.diff(radii) <= 0):
        raise DomainError("table exponent points must be strictly increasing")
    if values.min() < 1.0:
        raise DomainError(f"exponents must be >= 1, got minimum {values.min()}")

    def evaluate(x):
        return np.interp(_radius(x), radii, values)

    return ExponentFunction(
        ExponentKind.TABLE, domain, evaluate, float(values.min()), float(values.max()), float(values[-1]),
        float(values[0]) if domain is MeasureKind.HAAR else None,
        {"kind": "table", "points": radii.tolist(), "values": values.tolist()},
    )


def step_exponent(left, right, at=0.0, domain=MeasureKind.GAUSSIAN):
    """left for x_1 < at, right otherwise; deliberately not log-Holder"""
    if min(left, right) < 1.0:
        raise DomainError("exponents must be >= 1")

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        first = x if x.ndim <= 1 else x[:, 0]
        return np.where(first < at, left, right)

    return ExponentFunction(
        ExponentKind.STEP, domain, evaluate, float(min(left, right)), float(max(left, right)), float(right),
        float(left) if domain is MeasureKind.HAAR else None,
        {"kind": "step", "left": left, "right": right, "at": at},
    )


def callable_exponent(fn, p_minus, p_plus, p_inf, p_zero=None, domain=MeasureKind.GAUSSIAN):
    if p_minus < 1.0 or p_plus < p_minus:
        raise DomainError(f"need 1 <= p_- <= p_+, got [{p_minus}, {p_plus}]")
    return ExponentFunction(ExponentKind.CALLABLE, domain, fn, p_minus, p_plus, p_inf, p_zero,
                            {"kind": "callable"})


def exponent_from_description(description, domain=MeasureKind.GAUSSIAN, path="p"):
    """Build an ExponentFunction from its declarative form in a run configuration"""
    if isinstance(description, (int, float)):
        return constant_exponent(description, domain)
    if isinstance(description, str):
        if description.lower() in ("inf", "infinity"):
            return constant_exponent(math.inf, domain)
        raise ConfigError(f"unknown exponent shorthand {description!r}", path)
    if not isinstance(description, dict):
        raise ConfigError("exponent must be a number, 'inf' or an object", path)
    kind = description.get("kind")
    try:
        if kind == "constant":
            value = description.get("value")
            if isinstance(value, str) and value.lower() in ("inf", "infinity"):
                value = math.inf
            return constant_exponent(value, domain)
        if kind == "infinite":
            return constant_exponent(math.inf, domain)
        if kind == "rational_decay":
            return rational_decay_exponent(
                float(description["p_inf"]), float(description.get("A", 1.0)),
                float(description.get("power", 2.0)), float(description.get("shift", math.e)), domain)
        if kind == "table":
            return table_exponent(description["points"], description["values"], domain)
        if kind == "step":
            return step_exponent(float(description["left"]), float(description["right"]),
                                 float(description.get("at", 0.0)), domain)
    except KeyError as e:
        raise ConfigError(f"missing field {e.args[0]!r}", f"{path}.{e.args[0]}")
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e), path)
    raise ConfigError(f"unknown exponent kind {kind!r}", f"{path}.kind")


# class-membership certificates

def check_log_holder(p, grid, base_point=None, reciprocal=False):
    """
    Estimated log-Holder constants of p (or of 1/p with reciprocal=True) on a point set.

    local = max |p(x) - p(y)| log(e + 1/|x - y|) over pairs,
    decay = max |p(x) - p_inf| log(e + |x - x0|).
    """
    points = np.asarray(grid, dtype=float)
    if points.shape[0] < 2:
        raise DomainError("log-Holder check needs at least two points")
    values = p(points)
    limit = p.p_inf
    if reciprocal:
        values = 1.0 / values
        limit = 1.0 / limit
    flat = points.reshape(points.shape[0], -1)
    if base_point is None:
        base_point = np.zeros(flat.shape[1])
    diffs = np.abs(values[:, None] - values[None, :])
    distances = np.linalg.norm(flat[:, None, :] - flat[None, :, :], axis=2)
    off_diagonal = distances > 0
    local = 0.0
    if np.any(off_diagonal):
        local = float(np.max(diffs[off_diagonal] * np.log(math.e + 1.0 / distances[off_diagonal])))
    reach = np.linalg.norm(flat - np.asarray(base_point, dtype=float), axis=1)
    decay = float(np.max(np.abs(values - limit) * np.log(math.e + reach)))
    return LogHolderConstants(local, decay)


def check_gaussian_decay(p, grid):
    """Smallest C with |p(x) - p_inf| <= C / |x|^2 on the grid (the P^inf_gamma certificate)"""
    points = np.asarray(grid, dtype=float)
    radius = _radius(points)
    mask = radius > 0
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(p(points[mask]) - p.p_inf) * radius[mask] ** 2))


def check_zero_infinity(q, times):
    """
    Estimated constants A for conditions ii_0 and ii_inf of the class P_{0,inf}:
    |q(t) - q(0)| <= A / ln(1/t) on (0, 1/2] and |q(t) - q(inf)| <= A / ln t for t > 2.
    """
    t = np.asarray(times, dtype=float)
    values = q(t)
    near = (t > 0) & (t <= 0.5)
    far = t > 2.0
    q_zero = q.p_zero if q.p_zero is not None else float(values[np.argmin(t)])
    a_zero = float(np.max(np.abs(values[near] - q_zero) * np.log(1.0 / t[near]))) if np.any(near) else 0.0
    a_inf = float(np.max(np.abs(values[far] - q.p_inf) * np.log(t[far]))) if np.any(far) else 0.0
    return a_zero, a_inf


# discretization

def discretize(g, rule):
    """Sample an evaluable g at the nodes of a gamma_d rule"""
    values = evaluate_on(g, rule.nodes)
    return DiscretizedFunction(values, rule.weights, rule.nodes, MeasureKind.GAUSSIAN)


def discretize_expansion(f, rule):
    return DiscretizedFunction(expansion_values(f, rule.nodes), rule.weights, rule.nodes, MeasureKind.GAUSSIAN)


def discretize_on_grid(g, grid, measure=MeasureKind.HAAR):
    """Samples of g on a TimeGrid against dt/t (HAAR) or dt (LEBESGUE)"""
    times = grid.points
    values = g(times) if callable(g) else np.asarray(g, dtype=float)
    weights = grid.haar_weights
    if measure is MeasureKind.LEBESGUE:
        weights = weights * times
    elif measure is not MeasureKind.HAAR:
        raise DomainError(f"time grids carry dt/t or dt, not {measure.value}")
    return DiscretizedFunction(values, weights, times, measure, grid.log_step)


# modular and norms

def _tail_terms(terms, tail_step):
    """
    Power-law extrapolation of the integrand beyond both grid ends.

    terms[:, i] are trapezoid summands in log t, so dividing by the end
    weights (h/2 at the ends, h inside) gives the density per unit log t.
    Its log-slope between the last two nodes at each end must point towards
    decay; otherwise the tail, and the integral, is infinite.
    """
    h = tail_step
    lower = (terms[:, 0] / (0.5 * h), terms[:, 1] / h)
    upper = (terms[:, -1] / (0.5 * h), terms[:, -2] / h)
    tails = np.zeros(terms.shape[0])
    with np.errstate(divide='ignore', invalid='ignore'):
        for end, inner in (lower, upper):
            rate = (np.log(inner) - np.log(end)) / h
            piece = np.where(rate > 0, end / np.where(rate > 0, rate, 1.0), np.inf)
            tails += np.where((end > 0) & (inner > 0), piece, 0.0)
    return tails


def _modular_rows(values, weights, exponents, scale, tail_step=None):
    """rho(v / lambda) for each row of values, lambda taken row-wise from scale"""
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        log_values = np.log(values)
        exponent_term = exponents * (log_values - np.log(scale)[:, None])
        terms = np.where(values > 0, np.exp(exponent_term), 0.0) * weights
    total = terms.sum(axis=1)
    if tail_step is not None:
        total = total + _tail_terms(terms, tail_step)
    return total


def luxemburg_rows(values, weights, exponents, tail_step=None, rtol=BISECTION_RTOL, allow_infinite=False):
    """
    Luxemburg norms of several sample vectors sharing nodes, weights and exponents.

    Constant exponents use the closed form; variable exponents run a
    bracket-doubling plus bisection on log(lambda) for all rows at once.
    """
    values = np.abs(np.atleast_2d(np.asarray(values, dtype=float)))
    weights = np.asarray(weights, dtype=float)
    exponents = np.asarray(exponents, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericalError("non-finite sample values in norm computation")
    if np.any(~np.isfinite(exponents)):
        raise DomainError("the modular needs p_+ < inf; use the supremum branch for q = inf")
    rows = values.shape[0]
    norms = np.zeros(rows)
    active = np.any(values > 0, axis=1)
    if not np.any(active):
        return norms
    v = values[active]
    if np.ptp(exponents) == 0.0:
        p = float(exponents[0])
        rho_at_one = _modular_rows(v, weights, exponents, np.ones(v.shape[0]), tail_step)
        norms[active] = rho_at_one ** (1.0 / p)
        if not allow_infinite and not np.all(np.isfinite(norms)):
            raise NumericalError("norm is infinite: the samples are not normalizable")
        return norms

    def rho(scale):
        return _modular_rows(v, weights, exponents, scale, tail_step)

    mean_p = float(np.mean(exponents))
    start = _modular_rows(v, weights, np.full_like(exponents, mean_p), np.ones(v.shape[0]), tail_step)
    start = np.where(np.isfinite(start) & (start > 0), start ** (1.0 / mean_p), 1.0)
    hi = start.copy()
    lo = start.copy()
    result = np.full(v.shape[0], np.inf)
    pending = np.ones(v.shape[0], dtype=bool)
    for _ in range(BRACKET_STEPS + 1):
        grow = pending & (rho(hi) > 1.0)
        if not np.any(grow):
            break
        hi[grow] *= 2.0
    else:
        grow = rho(hi) > 1.0
        if not allow_infinite:
            logging.error(f"Luxemburg bracket failed for {int(grow.sum())} of {v.shape[0]} rows")
            raise NumericalError(f"bracket expansion exceeded 2^{BRACKET_STEPS}: input is not normalizable")
        pending &= ~grow
    for _ in range(BRACKET_STEPS + 1):
        shrink = pending & (rho(lo) <= 1.0)
        if not np.any(shrink):
            break
        lo[shrink] *= 0.5
    else:
        raise NumericalError(f"bracket contraction exceeded 2^-{BRACKET_STEPS}")
    for _ in range(200):
        if not np.any(pending & (np.log(hi / lo) > rtol)):
            break
        mid = np.sqrt(lo * hi)
        inside = rho(mid) <= 1.0
        hi = np.where(pending & inside, mid, hi)
        lo = np.where(pending & ~inside, mid, lo)
    result[pending] = hi[pending]
    norms[active] = result
    return norms


def modular(f, p):
    """rho_{p(.),mu}(f): sum_i w_i |f(x_i)|^{p(x_i)}, plus grid tails when f lives on a TimeGrid"""
    if p.is_infinite:
        raise DomainError("the modular needs p_+ < inf")
    if not np.all(np.isfinite(f.values)):
        raise NumericalError("non-finite sample values in modular")
    exponents = p(f.points)
    return float(_modular_rows(f.values[None, :], f.weights, exponents, np.ones(1), f.tail_step)[0])


def luxemburg_norm(f, p):
    """inf{lambda > 0 : rho(f / lambda) <= 1}; zero for the zero function"""
    if f.is_zero:
        return 0.0
    exponents = p(f.points)
    allow_infinite = f.tail_step is not None
    return float(luxemburg_rows(f.values, f.weights, exponents, f.tail_step,
                                allow_infinite=allow_infinite)[0])


def haar_norm(g, q):
    """
    Norm of samples on a TimeGrid against dt/t; the supremum of |g| when q is infinite.

    Non-integrable tails give inf, which callers report as "not in the space".
    """
    if g.measure is not MeasureKind.HAAR:
        raise DomainError(f"haar_norm needs samples against dt/t, got {g.measure.value}")
    if q.is_infinite:
        return float(np.max(g.values)) if g.values.size else 0.0
    return luxemburg_norm(g, q)


def lebesgue_norm(g, q):
    """Norm of samples on a TimeGrid against flat dt"""
    if g.measure is not MeasureKind.LEBESGUE:
        raise DomainError(f"lebesgue_norm needs samples against dt, got {g.measure.value}")
    if q.is_infinite:
        return float(np.max(g.values)) if g.values.size else 0.0
    return luxemburg_norm(g, q)


def expansion_norm(f, p, rule):
    """||f||_{p(.),gamma_d} of a Hermite expansion, sampled on a rule"""
    return luxemburg_norm(discretize_expansion(f, rule), p)

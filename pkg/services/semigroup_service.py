"""
The Ornstein-Uhlenbeck semigroup T_t, the Poisson-Hermite semigroup P_t,
their kernels, Bochner subordination and the one-sided stable measure of
order 1/2.
"""

import logging
import math
from functools import lru_cache

import numpy as np
import sympy
from numpy.polynomial.legendre import leggauss
from scipy.special import erf

from config import DEFAULTS
from errors import DomainError, NumericalError
from models import SubordinationQuadrature, TimeGrid
from services.hermite_service import as_points, evaluate_on

MAX_STABLE_ORDER = 4
SQRT_PI = math.sqrt(math.pi)


def time_grid(t_min=None, t_max=None, count=None):
    return TimeGrid(
        float(DEFAULTS["t_min"] if t_min is None else t_min),
        float(DEFAULTS["t_max"] if t_max is None else t_max),
        int(DEFAULTS["t_count"] if count is None else count),
    )


@lru_cache(maxsize=32)
def _legendre(order):
    return leggauss(order)


def panel_rule(breakpoints, order=16):
    """Gauss-Legendre of the given order on each interval between consecutive breakpoints"""
    x, w = _legendre(order)
    edges = np.unique(np.asarray(breakpoints, dtype=float))
    left, right = edges[:-1], edges[1:]
    half = 0.5 * (right - left)
    nodes = (0.5 * (left + right))[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def log_panel_rule(lower, upper, ratio=2.0, order=16, extra_breakpoints=()):
    """
    Panels graded geometrically between lower > 0 and upper.

    Suited to integrands that vary on the scale of their argument, such as
    t^a e^{-ct} over many decades.
    """
    if not 0 < lower < upper:
        raise DomainError(f"log panel rule needs 0 < lower < upper, got [{lower}, {upper}]")
    count = max(2, int(math.ceil(math.log(upper / lower) / math.log(ratio))) + 1)
    edges = np.geomspace(lower, upper, count)
    extra = [b for b in extra_breakpoints if lower < b < upper]
    return panel_rule(np.concatenate([edges, extra]), order)


# Ornstein-Uhlenbeck

def _check_time(t, strict=False):
    if strict and not t > 0:
        raise DomainError(f"need t > 0, got {t}")
    if t < 0:
        raise DomainError(f"need t >= 0, got {t}")


def ou_apply_spectral(f, t):
    """T_t h_nu = e^{-t|nu|} h_nu, coefficient-wise"""
    _check_time(t)
    return f.apply_multiplier(lambda n: np.exp(-t * n))


def ou_apply_kernel(g, t, x, rule):
    """T_t g(x) = int g(sqrt(1 - e^{-2t}) u + e^{-t} x) gamma_d(du), by quadrature"""
    _check_time(t, strict=True)
    points, single = as_points(x, rule.dimension)
    spread = math.sqrt(-math.expm1(-2.0 * t))
    shifted = spread * rule.nodes[None, :, :] + math.exp(-t) * points[:, None, :]
    values = evaluate_on(g, shifted.reshape(-1, rule.dimension)).reshape(points.shape[0], rule.size)
    result = values @ rule.weights
    return float(result[0]) if single else result


def mehler_kernel(t, x, y):
    """Density of T_t with respect to dy: pi^{-d/2}(1-e^{-2t})^{-d/2} exp(-|y - e^{-t}x|^2 / (1-e^{-2t}))"""
    _check_time(t, strict=True)
    x = np.asarray(x, dtype=float).ravel()
    d = x.size
    points, single = as_points(y, d)
    spread = -math.expm1(-2.0 * t)
    sq = np.sum((points - math.exp(-t) * x[None, :]) ** 2, axis=1)
    values = np.exp(-sq / spread) / (math.pi * spread) ** (d / 2.0)
    return float(values[0]) if single else values


# Poisson-Hermite

def poisson_apply_spectral(f, t):
    """P_t h_nu = e^{-t sqrt|nu|} h_nu, coefficient-wise"""
    _check_time(t)
    return f.apply_multiplier(lambda n: np.exp(-t * np.sqrt(n)))


def poisson_derivative_multiplier(n, t, k):
    """(-sqrt n)^k e^{-t sqrt n}, broadcasting over orders n and times t"""
    a = np.sqrt(n)
    return (-a) ** k * np.exp(-t * a)


def poisson_derivative(f, t, k):
    """u^{(k)}(., t): coefficient-wise (-sqrt|nu|)^k e^{-t sqrt|nu|}; t = 0 is allowed"""
    _check_time(t)
    if k < 0:
        raise DomainError(f"derivative order must be >= 0, got {k}")
    return f.apply_multiplier(lambda n: poisson_derivative_multiplier(n, t, k))


@lru_cache(maxsize=8)
def subordination_quadrature(v_min=1e-8, v_max=10.0, ratio=1.5, order=20):
    """
    Rule for int phi(u) e^{-u} u^{-1/2} du with u = v^2.

    The substitution turns the weight into 2 e^{-v^2} dv; Gauss-Legendre
    panels graded towards v = 0 then resolve e^{-c/v^2} for every c >= 0.
    The weights are normalized to sqrt(pi) so that P_t 1 = 1 exactly.
    """
    nodes, weights = log_panel_rule(v_min, v_max, ratio, order)
    head_nodes, head_weights = panel_rule([0.0, v_min], order)
    v = np.concatenate([head_nodes, nodes])
    w = 2.0 * np.exp(-v ** 2) * np.concatenate([head_weights, weights])
    raw = float(w.sum())
    residual = abs(raw - SQRT_PI)
    logging.debug(f"Subordination rule: {v.size} nodes, mass residual {residual:.2e}")
    return SubordinationQuadrature(v ** 2, w * (SQRT_PI / raw), residual)


def subordination_multipliers(t, orders, quad=None):
    """pi^{-1/2} int u^{-1/2} e^{-u} e^{-(t^2/4u)|nu|} du for each order"""
    quad = quad or subordination_quadrature()
    if quad.mass_residual > DEFAULTS["subordination_tol"]:
        raise NumericalError("subordination rule does not reproduce sqrt(pi)", quad.mass_residual)
    orders = np.asarray(orders, dtype=float)
    exponent = -(t * t / 4.0) * orders[:, None] / quad.nodes[None, :]
    return np.exp(exponent) @ quad.weights / SQRT_PI


def poisson_apply_subordination(f, t, quad=None):
    """P_t f by Bochner subordination of T_t, applied coefficient-wise"""
    _check_time(t, strict=True)
    if not f.coefficients:
        return f
    return f.with_values(f.values * subordination_multipliers(t, f.orders, quad))


# one-sided stable measure

def stable_measure_density(t, s):
    """(t / 2 sqrt(pi)) e^{-t^2/4s} s^{-3/2}"""
    s = np.asarray(s, dtype=float)
    if not t > 0 or np.any(s <= 0):
        raise DomainError("the stable density needs t > 0 and s > 0")
    values = t / (2.0 * SQRT_PI) * np.exp(-t * t / (4.0 * s)) * s ** -1.5
    return float(values) if values.ndim == 0 else values


def _stable_tail_mass(upper_sigma):
    # mass of the stable law beyond s = t^2 * upper_sigma
    return float(erf(1.0 / (2.0 * math.sqrt(upper_sigma))))


def _sigma_rule(upper_sigma, ratio=2.0, order=16, extra_breakpoints=()):
    # below sigma = 1e-3 the density is under e^{-250}
    return log_panel_rule(1e-3, upper_sigma, ratio, order, extra_breakpoints)


def stable_measure_mass(t, upper_sigma=1e4):
    """Total mass of mu_t, with the analytic tail beyond t^2 * upper_sigma"""
    sigma, weights = _sigma_rule(upper_sigma)
    body = float(np.dot(t * t * weights, stable_measure_density(t, t * t * sigma)))
    return body + _stable_tail_mass(upper_sigma)


def poisson_apply_stable(f, t):
    """P_t f = int T_s f mu_t(ds), coefficient-wise"""
    _check_time(t, strict=True)
    if not f.coefficients:
        return f
    upper_sigma = max(1e4, 50.0 / (t * t))
    sigma, weights = _sigma_rule(upper_sigma)
    s = t * t * sigma
    density = stable_measure_density(t, s) * t * t * weights
    orders = f.orders
    multipliers = np.exp(-np.outer(orders, s)) @ density
    multipliers = multipliers + _stable_tail_mass(upper_sigma) * np.exp(-orders * t * t * upper_sigma)
    return f.with_values(f.values * multipliers)


_T, _S = sympy.symbols('t s', positive=True)
_DENSITY = _T / (2 * sympy.sqrt(sympy.pi)) * sympy.exp(-_T ** 2 / (4 * _S)) * _S ** sympy.Rational(-3, 2)


@lru_cache(maxsize=None)
def stable_density_derivative(k):
    """
    The k-th t-derivative of the stable density, lambdified, with the values of
    s / t^2 where it changes sign.
    """
    if not 0 <= k <= MAX_STABLE_ORDER:
        raise DomainError(f"stable density derivatives are available for k in 0..{MAX_STABLE_ORDER}, got {k}")
    expr = sympy.diff(_DENSITY, _T, k)
    w = sympy.symbols('w', positive=True)
    factor = sympy.expand(sympy.simplify(expr / _DENSITY).subs(_T, 1).subs(_S, 1 / w))
    roots = sympy.real_roots(sympy.Poly(factor, w)) if factor.free_symbols else []
    sign_changes = tuple(sorted(1.0 / float(r) for r in roots if float(r) > 0))
    logging.debug(f"Stable density derivative k={k}: sign changes at sigma={sign_changes}")
    return sympy.lambdify((_T, _S), expr, modules='numpy'), sign_changes


def _derivative_mass(t, k, ratio, upper_sigma):
    fn, sign_changes = stable_density_derivative(k)
    sigma, weights = _sigma_rule(upper_sigma, ratio, extra_breakpoints=sign_changes)
    s = t * t * sigma
    body = float(np.dot(t * t * weights, np.abs(fn(t, s))))
    end = t * t * upper_sigma
    outer, inner = abs(float(fn(t, end))), abs(float(fn(t, end / 2.0)))
    decay = math.log(inner / outer) / math.log(2.0)
    if not decay > 1.0:
        raise NumericalError(f"derivative mass tail does not decay (exponent {decay:.3f})")
    return body + outer * end / (decay - 1.0)


def stable_derivative_mass(t, k, ratio=2.0, upper_sigma=1e6, tol=1e-8):
    """
    int |d^k/dt^k mu_t|(ds), split at the sign changes of the derivative.

    A second pass on panels of half the log width estimates the residual.
    """
    if not t > 0:
        raise DomainError(f"need t > 0, got {t}")
    if k == 0:
        return stable_measure_mass(t)
    value = _derivative_mass(t, k, ratio, upper_sigma)
    check = _derivative_mass(t, k, math.sqrt(ratio), upper_sigma)
    residual = abs(value - check)
    if residual > tol * max(1.0, abs(value)):
        raise NumericalError(f"stable derivative mass did not converge for t={t}, k={k}", residual)
    return value


def poisson_kernel_rule(t, ratio=1.5, order=16, upper=40.0):
    """
    r-nodes and dr-weights for the kernel integral, built in s = -log r.

    The lower end sits where e^{-t^2/4s} is below e^{-500}; s = 1 (r = 1/e)
    is always a breakpoint.
    """
    lower = t * t / 2000.0
    s, w = log_panel_rule(lower, upper, ratio, order, extra_breakpoints=(1.0,))
    r = np.exp(-s)
    return r, w * r


def poisson_kernel_eval(t, x, y, r_rule=None, tol=None):
    """
    p(t, x, y), the density of P_t with respect to dy, by integration over r in (0, 1).

    With the default rule the piece r < e^{-40} is added analytically and a
    second pass on finer panels supplies the residual estimate.
    """
    _check_time(t, strict=True)
    x = np.asarray(x, dtype=float).ravel()
    d = x.size
    points, single = as_points(y, d)
    if r_rule is None:
        upper = 40.0
        value = _kernel_integral(t, x, points, poisson_kernel_rule(t, upper=upper))
        value = value + _kernel_tail(t, points, d, upper)
        check = _kernel_integral(t, x, points, poisson_kernel_rule(t, ratio=math.sqrt(1.5), upper=upper))
        check = check + _kernel_tail(t, points, d, upper)
        residual = float(np.max(np.abs(value - check)))
        tol = DEFAULTS["kernel_tol"] if tol is None else tol
        if residual > tol * max(1.0, float(np.max(np.abs(value)))):
            raise NumericalError(f"Poisson kernel integral did not converge at t={t}", residual)
    else:
        value = _kernel_integral(t, x, points, r_rule)
    return float(value[0]) if single else value


def poisson_apply_kernel(g, t, x, rule):
    """
    P_t g(x) = int p(t, x, y) g(y) dy over the nodes of a gamma_d rule.

    The kernel is a density in dy, so each weight carries pi^{d/2} e^{|y|^2}.
    A dense trapezoid rule suits it better than Gauss-Hermite for small t.
    """
    _check_time(t, strict=True)
    points, single = as_points(x, rule.dimension)
    flat = math.pi ** (rule.dimension / 2.0) * np.exp(np.sum(rule.nodes ** 2, axis=1)) * rule.weights
    weighted = flat * evaluate_on(g, rule.nodes)
    result = np.array([np.dot(poisson_kernel_eval(t, point, rule.nodes), weighted) for point in points])
    return float(result[0]) if single else result


def _kernel_integral(t, x, points, r_rule):
    r, w = r_rule
    d = x.size
    s = -np.log(r)
    one_minus_r2 = -np.expm1(-2.0 * s)
    radial = t * np.exp(-t * t / (4.0 * s)) * s ** -1.5 / one_minus_r2 ** (d / 2.0) / r
    diff = points[:, None, :] - r[None, :, None] * x[None, None, :]
    gauss = np.exp(-np.sum(diff ** 2, axis=2) / one_minus_r2[None, :])
    return (gauss * radial[None, :]) @ w / (2.0 * math.pi ** ((d + 1) / 2.0))


def _kernel_tail(t, points, d, upper):
    # for s > upper the OU factor is e^{-|y|^2} to double precision
    mass = 2.0 * SQRT_PI * erf(t / (2.0 * math.sqrt(upper)))
    return mass * np.exp(-np.sum(points ** 2, axis=1)) / (2.0 * math.pi ** ((d + 1) / 2.0))

"""
Gaussian Bessel potentials J_beta and Bessel fractional derivatives D^beta,
spectral and integral forms, and the forward-difference machinery they use.
"""

import itertools
import logging
import math
import warnings

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.special import binom, gamma, gammainc, gammaincc, gammainccinv

from config import DEFAULTS
from errors import DomainError, NumericalError
from models import BesselOrder, ForwardDifference
from services.semigroup_service import log_panel_rule, poisson_apply_spectral, poisson_derivative


def bessel_order(beta):
    return BesselOrder(beta)


def bessel_potential_spectral(f, beta):
    """J_beta h_nu = (1 + sqrt|nu|)^{-beta} h_nu; beta = 0 is the identity"""
    if beta < 0:
        raise DomainError(f"need beta >= 0, got {beta}")
    return f.apply_multiplier(lambda n: (1.0 + np.sqrt(n)) ** -beta)


def bessel_derivative_spectral(f, beta):
    """D^beta h_nu = (1 + sqrt|nu|)^{beta} h_nu"""
    if beta < 0:
        raise DomainError(f"need beta >= 0, got {beta}")
    return f.apply_multiplier(lambda n: (1.0 + np.sqrt(n)) ** beta)


def _potential_cutoffs(beta, tol):
    # int_0^eps t^{beta-1} dt / Gamma(beta) = tol and Q(beta, T) = tol
    lower = (tol * gamma(beta) * beta) ** (1.0 / beta)
    upper = float(gammainccinv(beta, tol))
    return lower, upper


def _grid_nodes(grid):
    """Trapezoid in log t on a TimeGrid, as nodes and dt-weights"""
    times = grid.points
    return times, grid.haar_weights * times


def bessel_potential_integral(f, beta, grid=None, tol=None):
    """
    J_beta f = Gamma(beta)^{-1} int_0^inf t^beta e^{-t} P_t f dt/t, coefficient-wise.

    Without a grid the integration range comes from analytic cutoffs. With a
    grid the integral is truncated to it and the known tails of the Gamma
    integrand are the residual, which must stay below tol.
    """
    if not beta > 0:
        raise DomainError(f"need beta > 0, got {beta}")
    tol = DEFAULTS["operator_tol"] if tol is None else tol
    if not f.coefficients:
        return f
    rates = 1.0 + np.sqrt(f.orders)
    if grid is None:
        lower, upper = _potential_cutoffs(beta, tol)
        t, w = log_panel_rule(lower, upper)
        residual = 2.0 * tol
    else:
        t, w = _grid_nodes(grid)
        # lower and upper tails of the worst-placed rate, as fractions of the total
        residual = float(np.max(gammainc(beta, rates * grid.t_min) + gammaincc(beta, rates * grid.t_max)))
        if residual > tol:
            raise NumericalError(f"time grid [{grid.t_min}, {grid.t_max}] truncates the Bessel potential integral",
                                 residual)
    integrand = t ** (beta - 1.0) * w
    multipliers = np.exp(-np.outer(rates, t)) @ integrand / gamma(beta)
    logging.debug(f"Bessel potential beta={beta}: {t.size} nodes, residual bound {residual:.1e}")
    return f.with_values(f.values * multipliers)


def forward_difference(phi, k, s, t=0.0):
    """
    Delta_s^k(phi, t) = sum_j C(k, j) (-1)^j phi(t + (k - j) s).

    phi may return arrays; the sum is taken element-wise.
    """
    difference = ForwardDifference(int(k), float(s), float(t))
    total = 0.0
    for coefficient, point in zip(difference.coefficients, difference.points):
        total = total + coefficient * np.asarray(phi(point), dtype=float)
    return float(total) if np.ndim(total) == 0 else total


def iterated_forward_difference(phi, k, s, t=0.0):
    """Delta_s applied k times to phi, evaluated at t"""
    ForwardDifference(int(k), float(s), float(t))
    current = phi
    for _ in range(int(k)):
        current = (lambda g: (lambda x: np.asarray(g(x + s), dtype=float) - np.asarray(g(x), dtype=float)))(current)
    value = current(t)
    return float(value) if np.ndim(value) == 0 else value


def forward_difference_integral(phi_k, k, s, t=0.0, order=12):
    """
    The nested-integral form: s^k int_{[0,1]^k} phi^{(k)}(t + s(x_1 + ... + x_k)) dx.

    phi_k is the k-th derivative of phi, called on an array of abscissae.
    """
    ForwardDifference(int(k), float(s), float(t))
    x, w = leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    points = np.array(list(itertools.product(x, repeat=int(k)))).sum(axis=1)
    weights = np.prod(np.array(list(itertools.product(w, repeat=int(k)))), axis=1)
    values = np.asarray(phi_k(t + s * points), dtype=float)
    return float(s ** k * np.dot(weights, values))


def _check_c_beta_args(k, beta):
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    if not 0 < beta < k:
        raise DomainError(f"c_beta needs 0 < beta < k, got beta={beta}, k={k}")


def c_beta(k, beta, method="quad"):
    """
    c^k_beta = int_0^inf u^{-beta-1} (e^{-u} - 1)^k du, sign (-1)^k.

    "quad" uses adaptive quadrature with the algebraic weight u^{k-beta-1}
    on (0, 1]; "trapezoid" is a trapezoid rule in log u with analytic end
    pieces. The two share no code and serve as mutual checks.
    """
    _check_c_beta_args(k, beta)
    k = int(k)
    if method == "quad":
        return _c_beta_quad(k, beta)
    if method == "trapezoid":
        return _c_beta_trapezoid(k, beta)
    raise DomainError(f"unknown c_beta method {method!r}")


def _c_beta_quad(k, beta):
    sign = (-1.0) ** k

    def smooth_head(u):
        # u^{-beta-1}(e^{-u}-1)^k = u^{k-beta-1} (expm1(-u)/u)^k
        return (np.expm1(-u) / u) ** k if u > 0 else sign

    def tail(u):
        return u ** (-beta - 1.0) * (np.expm1(-u) ** k - sign)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        head, head_err = integrate.quad(smooth_head, 0.0, 1.0, weight='alg', wvar=(k - beta - 1.0, 0.0),
                                        epsabs=1e-13, epsrel=1e-12, limit=200)
        body, body_err = integrate.quad(tail, 1.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    if head_err + body_err > 1e-10:
        raise NumericalError(f"c_beta quadrature failed for k={k}, beta={beta}", head_err + body_err)
    # int_1^inf u^{-beta-1} (-1)^k du
    return head + body + sign / beta


def _c_beta_trapezoid(k, beta, step=0.02):
    sign = (-1.0) ** k
    # the two-term series below u = 1e-7 is exact to O(u^{k-beta+2})
    lower = math.log(1e-7)
    upper = math.log(60.0)
    tau = np.linspace(lower, upper, int(math.ceil((upper - lower) / step)) + 1)
    h = tau[1] - tau[0]
    u = np.exp(tau)
    values = u ** (-beta) * (np.expm1(-u) ** k)
    weights = np.full(tau.size, h)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    body = float(np.dot(weights, values))
    # Euler-Maclaurin end corrections; at both ends the integrand is a pure exponential in log u
    rate_a, rate_b = k - beta, -beta
    fa, fb = values[0], values[-1]
    body -= h ** 2 / 12.0 * (rate_b * fb - rate_a * fa)
    body += h ** 4 / 720.0 * (rate_b ** 3 * fb - rate_a ** 3 * fa)
    end = u[-1]
    # below u_min the integrand is (-1)^k u^{k-beta-1}(1 + O(u)); above u_max it is (-1)^k u^{-beta-1}
    head = sign * u[0] ** (k - beta) / (k - beta) * (1.0 - k * (k - beta) / (k - beta + 1.0) * u[0] / 2.0)
    tail = sign * end ** (-beta) / beta
    return body + head + tail


def c_beta_closed_form(k, beta):
    """
    Gamma(-beta) sum_j C(k, j) (-1)^{k-j} j^beta.

    At integer beta = m < k the sum vanishes against the pole of Gamma; the
    limit is (-1)^{m+1}/m! sum_j C(k, j) (-1)^{k-j} j^m log j.
    """
    _check_c_beta_args(k, beta)
    k = int(k)
    if float(beta).is_integer():
        m = int(beta)
        total = sum(binom(k, j) * (-1.0) ** (k - j) * float(j) ** m * math.log(j) for j in range(2, k + 1))
        return float((-1.0) ** (m + 1) / math.factorial(m) * total)
    total = sum(binom(k, j) * (-1.0) ** (k - j) * float(j) ** beta for j in range(1, k + 1))
    return float(gamma(-beta) * total)


def _derivative_cutoffs(beta, k, max_rate, tol):
    # the integrand is below (max_rate t)^k t^{-beta-1} near 0 and below t^{-beta-1} at infinity
    lower = (tol * (k - beta) / max_rate ** k) ** (1.0 / (k - beta))
    upper = (1.0 / (beta * tol)) ** (1.0 / beta)
    return lower, upper


def _derivative_integrals_on_grid(rates, beta, k, grid, tol):
    """
    int_0^inf t^{-beta-1} (e^{-a t} - 1)^k dt for each rate a, using the nodes of a TimeGrid.

    Both ends past the grid are added in closed form: (-a t)^k (1 - k a t / 2)
    below t_min and (-1)^k above t_max. The trapezoid sum in log t gets its
    first endpoint correction. What is left of the truncation must stay
    below tol relative to |c^k_beta|.
    """
    t = grid.points
    h = grid.log_step
    sign = (-1.0) ** k
    decay = np.exp(-np.outer(rates, t))
    powers = np.expm1(-np.outer(rates, t))
    body = powers ** k @ (t ** -beta * grid.haar_weights)
    # d/d(log t) of t^{-beta} (e^{-a t} - 1)^k at both grid ends
    slopes = t[[0, -1]] ** -beta * (-beta * powers[:, [0, -1]] ** k
                                    - k * rates[:, None] * t[[0, -1]] * decay[:, [0, -1]]
                                    * powers[:, [0, -1]] ** (k - 1))
    body -= h ** 2 / 12.0 * (slopes[:, 1] - slopes[:, 0])
    t_min, t_max = grid.t_min, grid.t_max
    head = (-rates) ** k * (t_min ** (k - beta) / (k - beta)
                            - 0.5 * k * rates * t_min ** (k - beta + 1.0) / (k - beta + 1.0))
    tail = sign * t_max ** -beta / beta
    head_error = 0.25 * k ** 2 * float(rates.max()) ** (k + 2) * t_min ** (k + 2 - beta) / (k + 2 - beta)
    tail_error = k * math.exp(-t_max) * t_max ** (-beta - 1.0)
    residual = (head_error + tail_error) / abs(c_beta(k, beta))
    if residual > tol:
        raise NumericalError(f"time grid [{t_min}, {t_max}] truncates the Bessel derivative integral", residual)
    logging.debug(f"Bessel derivative on a {grid.count}-point grid, residual bound {residual:.1e}")
    return body + head + tail


def bessel_derivative_integral(f, beta, grid=None, tol=None):
    """
    D^beta f = (c^k_beta)^{-1} int_0^inf t^{-beta-1} (e^{-t} P_t - I)^k f dt, coefficient-wise,
    with k the smallest integer above beta.

    The normalizer is computed with the same nodes as the integrals, so that
    h_0 is mapped to itself exactly.
    """
    order = BesselOrder(beta)
    k = order.k
    tol = DEFAULTS["operator_tol"] if tol is None else tol
    if not f.coefficients:
        return f
    rates = 1.0 + np.sqrt(f.orders)
    all_rates = np.concatenate([[1.0], rates])
    if grid is None:
        lower, upper = _derivative_cutoffs(beta, k, float(rates.max()), tol * abs(c_beta(k, beta)))
        t, w = log_panel_rule(lower, upper)
        integrals = np.expm1(-np.outer(all_rates, t)) ** k @ (t ** (-beta - 1.0) * w)
    else:
        integrals = _derivative_integrals_on_grid(all_rates, beta, k, grid, tol)
    multipliers = integrals[1:] / integrals[0]
    logging.debug(f"Bessel derivative beta={beta}, k={k}: {t.size} nodes")
    return f.with_values(f.values * multipliers)


def semigroup_power_difference(f, t, k):
    """(P_t - I)^k f by the binomial sum of spectral applications"""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    result = f.scale(0.0)
    for j in range(k + 1):
        result = result + poisson_apply_spectral(f, j * t).scale(math.comb(k, j) * (-1.0) ** (k - j))
    return result


def derivative_difference(f, t, s, k, n):
    """Delta_s^k(u^{(n)}, t): the k-th forward difference in time of the n-th time derivative"""
    if not f.coefficients:
        return f
    values = forward_difference(lambda tau: poisson_derivative(f, tau, n).values, k, s, t)
    return f.with_values(values)

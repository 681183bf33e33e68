"""
Normalized Hermite polynomials, Gauss-Hermite rules against gamma_d,
Fourier-Hermite coefficients and Wiener chaos projections.
"""

import itertools
import logging
import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite

from errors import DimensionMismatchError, DomainError, NumericalError
from models import HermiteExpansion, MultiIndex, QuadratureRule

MAX_POINTS_PER_AXIS = 200


def as_points(x, dimension):
    """
    Coerce x into an (n, d) array of points.

    Returns the array and whether the caller passed a single point, so that
    results can be handed back as a scalar.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        if dimension != 1:
            raise DimensionMismatchError(dimension, 1)
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if dimension == 1:
            return arr.reshape(-1, 1), False
        if arr.shape[0] != dimension:
            raise DimensionMismatchError(dimension, arr.shape[0])
        return arr.reshape(1, dimension), True
    if arr.ndim == 2 and arr.shape[1] == dimension:
        return arr, False
    raise DimensionMismatchError(dimension, arr.shape[-1])


def hermite_table_1d(max_degree, x):
    """
    Values of the normalized h_0..h_max_degree at the points x, shape (len(x), max_degree + 1).

    Uses h_{n+1} = x sqrt(2/(n+1)) h_n - sqrt(n/(n+1)) h_{n-1}, h_0 = 1, h_1 = sqrt(2) x.
    """
    x = np.asarray(x, dtype=float).ravel()
    table = np.empty((x.size, max_degree + 1))
    table[:, 0] = 1.0
    if max_degree >= 1:
        table[:, 1] = math.sqrt(2.0) * x
    for n in range(1, max_degree):
        table[:, n + 1] = x * math.sqrt(2.0 / (n + 1)) * table[:, n] - math.sqrt(n / (n + 1)) * table[:, n - 1]
    return table


def hermite_design(indices, points):
    """Matrix H[i, j] = h_{nu_j}(x_i) for an (n, d) array of points"""
    points = np.asarray(points, dtype=float)
    if not indices:
        return np.zeros((points.shape[0], 0))
    dimension = points.shape[1]
    entries = np.array([index.entries for index in indices], dtype=int)
    if entries.shape[1] != dimension:
        raise DimensionMismatchError(dimension, entries.shape[1], what="multi-index")
    design = np.ones((points.shape[0], len(indices)))
    for axis in range(dimension):
        table = hermite_table_1d(int(entries[:, axis].max()), points[:, axis])
        design *= table[:, entries[:, axis]]
    return design


def hermite_eval(index, x):
    """h_nu(x) for a single point (returns a float) or an (n, d) array of points"""
    if not isinstance(index, MultiIndex):
        index = MultiIndex(tuple(index))
    points, single = as_points(x, index.dimension)
    values = hermite_design([index], points)[:, 0]
    return float(values[0]) if single else values


@lru_cache(maxsize=64)
def _gauss_hermite_1d(n):
    nodes, weights = roots_hermite(n)
    # physicists' weight e^{-x^2}; gamma_1 carries the extra 1/sqrt(pi)
    return nodes, weights / math.sqrt(math.pi)


def gauss_rule(dimension, n):
    """Tensor-product Gauss-Hermite rule for gamma_d, exact to per-axis degree 2n - 1"""
    if dimension < 1:
        raise DomainError(f"dimension must be positive, got {dimension}")
    if n < 1:
        raise DomainError(f"need at least one point per axis, got {n}")
    if n > MAX_POINTS_PER_AXIS:
        raise DomainError(f"at most {MAX_POINTS_PER_AXIS} points per axis are supported, got {n}")
    x, w = _gauss_hermite_1d(n)
    nodes = np.array(list(itertools.product(*(x,) * dimension)))
    weights = np.prod(np.array(list(itertools.product(*(w,) * dimension))), axis=1)
    logging.debug(f"Gauss-Hermite rule d={dimension} n={n}: {weights.size} nodes")
    return QuadratureRule(dimension, nodes, weights, 2 * n - 1)


def trapezoid_rule(dimension, n, half_width=10.0):
    """
    Composite trapezoid rule for gamma_d on the cube [-L, L]^d.

    Degree 1 only, but its error does not depend on smoothness of the
    integrand the way Gauss-Hermite's does; used for |f|^{p(x)} integrands.
    """
    if n < 2:
        raise DomainError(f"need at least two points per axis, got {n}")
    x = np.linspace(-half_width, half_width, n)
    h = x[1] - x[0]
    w = h * np.exp(-x ** 2) / math.sqrt(math.pi)
    w[0] *= 0.5
    w[-1] *= 0.5
    nodes = np.array(list(itertools.product(*(x,) * dimension)))
    weights = np.prod(np.array(list(itertools.product(*(w,) * dimension))), axis=1)
    # the mass outside the cube is below 1e-40 for L >= 10
    weights = weights / weights.sum()
    return QuadratureRule(dimension, nodes, weights, 1)


def evaluate_on(g, nodes):
    """Evaluate g on an (n, d) array of nodes, falling back to row-by-row calls"""
    try:
        values = np.asarray(g(nodes), dtype=float)
        if values.shape == (nodes.shape[0],):
            return values
    except (TypeError, ValueError, IndexError):
        pass
    values = np.array([float(g(node if node.size > 1 else node[0])) for node in nodes])
    return values


def _check_rule(rule, dimension):
    if rule.dimension != dimension:
        raise DimensionMismatchError(dimension, rule.dimension, what="quadrature rule")


def fourier_coefficient(g, index, rule):
    """<g, h_nu> in L2(gamma_d), by quadrature"""
    if not isinstance(index, MultiIndex):
        index = MultiIndex(tuple(index))
    _check_rule(rule, index.dimension)
    values = evaluate_on(g, rule.nodes)
    if not np.all(np.isfinite(values)):
        raise NumericalError("function returned non-finite values at quadrature nodes")
    return float(np.dot(rule.weights * values, hermite_design([index], rule.nodes)[:, 0]))


def chaos_projection(f, n):
    """J_n f: the part of f in the n-th Wiener chaos"""
    return HermiteExpansion(f.dimension, {
        index: value for index, value in f.coefficients.items() if index.order == n
    })


def chaos_decomposition(f):
    """All non-empty chaos components of f, keyed by order"""
    orders = sorted({index.order for index in f.coefficients})
    return {n: chaos_projection(f, n) for n in orders}


def expansion_eval(f, x):
    """Pointwise value of the Hermite series at one point or an (n, d) array"""
    points, single = as_points(x, f.dimension)
    if not f.coefficients:
        values = np.zeros(points.shape[0])
    else:
        values = hermite_design(f.indices, points) @ f.values
    return float(values[0]) if single else values


def expansion_values(f, nodes):
    """expansion_eval on an (n, d) array, always returning an array"""
    if not f.coefficients:
        return np.zeros(nodes.shape[0])
    return hermite_design(f.indices, nodes) @ f.values


def multi_indices(dimension, order):
    """All multi-indices of length d with |nu| = order, in lexicographic order"""
    if dimension == 1:
        return [MultiIndex((order,))]
    result = []
    for first in range(order + 1):
        for rest in multi_indices(dimension - 1, order - first):
            result.append(MultiIndex((first,) + rest.entries))
    return result


def multi_indices_up_to(dimension, max_order):
    return [index for n in range(max_order + 1) for index in multi_indices(dimension, n)]


def project_function(g, dimension, max_order, rule):
    """The Hermite expansion of g truncated at total order max_order"""
    _check_rule(rule, dimension)
    indices = multi_indices_up_to(dimension, max_order)
    values = evaluate_on(g, rule.nodes)
    if not np.all(np.isfinite(values)):
        raise NumericalError("function returned non-finite values at quadrature nodes")
    coefficients = hermite_design(indices, rule.nodes).T @ (rule.weights * values)
    return HermiteExpansion(dimension, dict(zip(indices, coefficients)))

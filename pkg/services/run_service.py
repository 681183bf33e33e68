"""
Run configurations and the bodies of the eval, norm, besov, op and verify
subcommands, shared by the command line and the HTTP blueprint.
"""

import logging
import math

import numpy as np

from config import defaults_header, load_defaults
from errors import ConfigError, DomainError, ToolkitError
from models import (HermiteExpansion, MeasureKind, MultiIndex, OperatorKind, OperatorSpec,
                    RunConfig, RunResult, TimeGrid)
from services.besov_service import besov_infty_constant, besov_norm, besov_seminorm
from services.exponent_service import (discretize_expansion, exponent_from_description, expansion_norm,
                                       modular)
from services.hermite_service import (expansion_values, gauss_rule, multi_indices_up_to,
                                      trapezoid_rule)
from services.operator_service import (bessel_derivative_integral, bessel_derivative_spectral,
                                       bessel_potential_integral, bessel_potential_spectral)
from services.semigroup_service import (ou_apply_kernel, ou_apply_spectral, poisson_apply_kernel,
                                        poisson_apply_stable, poisson_apply_subordination,
                                        poisson_derivative)
from services.verify_service import VerificationService
from utils.helpers import merge_dicts, params_hash

COMMANDS = ("eval", "norm", "besov", "op", "verify")

METHODS = {
    OperatorKind.ORNSTEIN_UHLENBECK: ("spectral", "kernel"),
    OperatorKind.POISSON: ("spectral", "subordination", "stable", "kernel"),
    OperatorKind.BESSEL_POTENTIAL: ("spectral", "integral"),
    OperatorKind.BESSEL_DERIVATIVE: ("spectral", "integral"),
}

RUN_CONFIG_SCHEMA = {
    "dimension": "integer d in 1..4 (default: defaults.dimension)",
    "expansion": {
        "coefficients": "list of {index: [nu_1, ..., nu_d], value: real}",
        "basis": "a single multi-index; with optional value (default 1)",
        "constant": "real c, the expansion c * h_0",
        "all_up_to": "integer n, the sum of every h_nu with |nu| <= n",
    },
    "p": "exponent on R^d: a number, 'inf', or {kind: constant|rational_decay|table|step, ...}",
    "q": "exponent on R+ (same forms as p); default 2",
    "besov": {"alpha": "smoothness alpha >= 0", "k": "integer k > alpha (default floor(alpha) + 1)"},
    "operator": {
        "kind": "ou | poisson | bessel_potential | bessel_derivative",
        "t": "time for ou and poisson",
        "beta": "order for bessel_potential and bessel_derivative",
        "method": "spectral | kernel (ou); spectral | subordination | stable | kernel (poisson); "
                  "spectral | integral (bessel_*)",
        "derivative": "time-derivative order k for poisson with the spectral method (default 0)",
    },
    "points": {"min": "lower end per axis (default -2)", "max": "upper end per axis (default 2)",
               "count": "points per axis (default 41)", "values": "explicit list of points (overrides the grid)"},
    "grid": {"t_min": "default defaults.t_min", "t_max": "default defaults.t_max",
             "count": "default defaults.t_count"},
    "quadrature": {"kind": "gauss | trapezoid", "points": "points per axis"},
    "checks": "list of verification check names (default: the whole suite)",
    "check_parameters": "map of check name -> {alpha, beta} for the theorem checks",
    "seed": "unsigned integer seed for the random family (default defaults.seed)",
    "defaults": "map of defaults-table overrides",
}

_KNOWN_KEYS = set(RUN_CONFIG_SCHEMA) | {"command"}


def _number(section, key, default, path, kind=float):
    value = section.get(key, default)
    if value is None:
        raise ConfigError("a value is required", f"{path}.{key}" if path else key)
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected {kind.__name__}, got {value!r}", f"{path}.{key}" if path else key)


def _section(document, key):
    value = document.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError("expected an object", key)
    return value


def _parse_index(entries, dimension, path):
    if not isinstance(entries, (list, tuple)) or len(entries) != dimension:
        raise ConfigError(f"expected a list of {dimension} non-negative integers", path)
    try:
        return MultiIndex(tuple(int(e) for e in entries))
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), path)


def parse_expansion(section, dimension, path="expansion"):
    """Build a HermiteExpansion from its declarative form"""
    if not section:
        return HermiteExpansion.zero(dimension)
    if "coefficients" in section:
        terms = section["coefficients"]
        if not isinstance(terms, list):
            raise ConfigError("expected a list", f"{path}.coefficients")
        coefficients = {}
        for i, term in enumerate(terms):
            where = f"{path}.coefficients[{i}]"
            if not isinstance(term, dict):
                raise ConfigError("expected {index, value}", where)
            index = _parse_index(term.get("index"), dimension, f"{where}.index")
            coefficients[index] = coefficients.get(index, 0.0) + _number(term, "value", None, where)
        return HermiteExpansion(dimension, coefficients)
    if "basis" in section:
        index = _parse_index(section["basis"], dimension, f"{path}.basis")
        return HermiteExpansion.basis(index, _number(section, "value", 1.0, path))
    if "constant" in section:
        return HermiteExpansion.basis(MultiIndex.zero(dimension), _number(section, "constant", None, path))
    if "all_up_to" in section:
        order = _number(section, "all_up_to", None, path, int)
        return HermiteExpansion(dimension, {index: 1.0 for index in multi_indices_up_to(dimension, order)})
    raise ConfigError("expected one of coefficients, basis, constant, all_up_to", path)


def _parse_operator(section):
    if not section:
        return None
    kind_name = section.get("kind")
    try:
        kind = OperatorKind(kind_name)
    except ValueError:
        raise ConfigError(f"unknown operator {kind_name!r}", "operator.kind")
    parameter_key = "t" if kind in (OperatorKind.ORNSTEIN_UHLENBECK, OperatorKind.POISSON) else "beta"
    parameter = _number(section, parameter_key, None, "operator")
    method = section.get("method", "spectral")
    if method not in METHODS[kind]:
        raise ConfigError(f"method {method!r} is not available for {kind.value}; expected one of "
                          f"{', '.join(METHODS[kind])}", "operator.method")
    derivative = _number(section, "derivative", 0, "operator", int)
    if derivative and (kind is not OperatorKind.POISSON or method != "spectral"):
        raise ConfigError("time derivatives need the spectral Poisson path", "operator.derivative")
    return OperatorSpec(kind, parameter, method, derivative)


def _parse_exponent(document, key, domain):
    try:
        return exponent_from_description(document.get(key, 2.0), domain, key)
    except DomainError as e:
        raise ConfigError(str(e), key)


def _parse_points(section, dimension):
    if "values" in section:
        values = np.asarray(section["values"], dtype=float)
        if values.ndim == 1 and dimension == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2 or values.shape[1] != dimension:
            raise ConfigError(f"expected points of dimension {dimension}", "points.values")
        return values
    low = _number(section, "min", -2.0, "points")
    high = _number(section, "max", 2.0, "points")
    count = _number(section, "count", 41, "points", int)
    if count < 1 or not high >= low:
        raise ConfigError("need count >= 1 and max >= min", "points")
    axis = np.linspace(low, high, count)
    mesh = np.meshgrid(*([axis] * dimension), indexing='ij')
    return np.stack([m.ravel() for m in mesh], axis=1)


def _parse_rule(section, dimension, defaults):
    kind = section.get("kind", "gauss")
    if kind == "gauss":
        fallback = defaults["gauss_points"] if dimension == 1 else defaults["gauss_points_2d"]
        return gauss_rule(dimension, _number(section, "points", fallback, "quadrature", int))
    if kind == "trapezoid":
        fallback = defaults["trapezoid_points"] if dimension == 1 else 201
        return trapezoid_rule(dimension, _number(section, "points", fallback, "quadrature", int),
                              defaults["trapezoid_half_width"])
    raise ConfigError(f"unknown quadrature {kind!r}", "quadrature.kind")


def parse_run_config(document, defaults=None, seed=None, refine=1):
    """
    Validate a RunConfig document against the defaults table.

    Every failure is a ConfigError whose path names the offending field.
    """
    if not isinstance(document, dict):
        raise ConfigError("the configuration must be a JSON object")
    unknown = sorted(set(document) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError("unknown field", unknown[0])
    base = dict(defaults) if defaults is not None else load_defaults()
    overrides = _section(document, "defaults")
    for key in overrides:
        if key not in base:
            raise ConfigError("unknown default", f"defaults.{key}")
    merged = merge_dicts(base, overrides)
    if seed is None:
        seed = document.get("seed", merged["seed"])
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise ConfigError(f"expected an unsigned integer, got {seed!r}", "seed")
    if seed < 0:
        raise ConfigError("the seed must be non-negative", "seed")
    merged["seed"] = seed
    dimension = _number(document, "dimension", merged["dimension"], "", int)
    if not 1 <= dimension <= 4:
        raise ConfigError(f"dimension must be in 1..4, got {dimension}", "dimension")
    merged["dimension"] = dimension
    if int(refine) < 1:
        raise ConfigError(f"the refinement factor must be >= 1, got {refine}", "refine")
    grid_section = _section(document, "grid")
    try:
        grid = TimeGrid(_number(grid_section, "t_min", merged["t_min"], "grid"),
                        _number(grid_section, "t_max", merged["t_max"], "grid"),
                        _number(grid_section, "count", merged["t_count"], "grid", int))
    except DomainError as e:
        raise ConfigError(str(e), "grid")
    if int(refine) > 1:
        grid = grid.refined(int(refine))
    try:
        rule = _parse_rule(_section(document, "quadrature"), dimension, merged)
    except DomainError as e:
        raise ConfigError(str(e), "quadrature")
    p = _parse_exponent(document, "p", MeasureKind.GAUSSIAN)
    q = _parse_exponent(document, "q", MeasureKind.HAAR)
    besov = _section(document, "besov")
    alpha = _number(besov, "alpha", None, "besov") if "alpha" in besov else None
    k = _number(besov, "k", None, "besov", int) if besov.get("k") is not None else None
    checks = document.get("checks")
    if checks is not None and (not isinstance(checks, list) or not all(isinstance(c, str) for c in checks)):
        raise ConfigError("expected a list of check names", "checks")
    check_parameters = _section(document, "check_parameters")
    for name, values in check_parameters.items():
        if not isinstance(values, dict):
            raise ConfigError("expected {alpha, beta}", f"check_parameters.{name}")
    return RunConfig(
        dimension=dimension,
        expansion=parse_expansion(_section(document, "expansion"), dimension),
        p=p,
        q=q,
        grid=grid,
        rule=rule,
        points=_parse_points(_section(document, "points"), dimension),
        alpha=alpha,
        k=k,
        operator=_parse_operator(_section(document, "operator")),
        checks=tuple(checks) if checks is not None else None,
        check_parameters=check_parameters,
        seed=seed,
        refine=int(refine),
        defaults=merged,
    )


def apply_operator(f, spec):
    """The coefficient-space image of f under the configured operator"""
    kind, method = spec.kind, spec.method
    if method == "kernel":
        raise DomainError("kernel methods produce point values; use the eval command")
    if kind is OperatorKind.ORNSTEIN_UHLENBECK:
        return ou_apply_spectral(f, spec.parameter)
    if kind is OperatorKind.POISSON:
        if method == "subordination":
            return poisson_apply_subordination(f, spec.parameter)
        if method == "stable":
            return poisson_apply_stable(f, spec.parameter)
        return poisson_derivative(f, spec.parameter, spec.derivative)
    if kind is OperatorKind.BESSEL_POTENTIAL:
        if method == "integral":
            return bessel_potential_integral(f, spec.parameter)
        return bessel_potential_spectral(f, spec.parameter)
    if method == "integral":
        return bessel_derivative_integral(f, spec.parameter)
    return bessel_derivative_spectral(f, spec.parameter)


def spectral_reference(f, spec):
    return apply_operator(f, OperatorSpec(spec.kind, spec.parameter, "spectral", spec.derivative))


class RunService:
    """Executes subcommands on parsed configurations"""

    def __init__(self, defaults=None):
        self.defaults = dict(defaults) if defaults is not None else load_defaults()

    def execute(self, command, document, seed=None, refine=1):
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}", "command")
        config = parse_run_config(document, self.defaults, seed, refine)
        logging.info(f"Running {command} (d={config.dimension}, seed={config.seed}, refine={config.refine})")
        handler = getattr(self, f"run_{command}")
        result = handler(config)
        header = defaults_header(config.defaults)
        header.update({"command": command, "config_hash": params_hash(document), "seed": config.seed,
                       "refine": config.refine})
        return RunResult(command, dict(header, **result.payload), result.table, result.exit_code)

    def run_eval(self, config):
        f = config.expansion
        points = config.points
        spec = config.operator
        if spec is None:
            values = expansion_values(f, points)
        elif spec.method == "kernel":
            def g(y):
                return expansion_values(f, np.asarray(y, dtype=float).reshape(-1, config.dimension))

            if spec.kind is OperatorKind.ORNSTEIN_UHLENBECK:
                values = ou_apply_kernel(g, spec.parameter, points, config.rule)
            else:
                n = config.defaults["trapezoid_points"] if config.dimension == 1 else 201
                rule = trapezoid_rule(config.dimension, n, config.defaults["trapezoid_half_width"])
                values = poisson_apply_kernel(g, spec.parameter, points, rule)
        else:
            values = expansion_values(apply_operator(f, spec), points)
        values = np.atleast_1d(np.asarray(values, dtype=float))
        header = tuple(f"x{i + 1}" for i in range(config.dimension)) + ("value",)
        rows = [tuple(float(c) for c in point) + (float(v),) for point, v in zip(points, values)]
        payload = {"points": len(rows), "max_abs_value": float(np.max(np.abs(values))) if rows else 0.0}
        return RunResult("eval", payload, (header, rows))

    def run_norm(self, config):
        f = config.expansion
        samples = discretize_expansion(f, config.rule)
        norm = expansion_norm(f, config.p, config.rule)
        at_norm = modular(samples.scale(1.0 / norm), config.p) if norm > 0 else 0.0
        payload = {"norm": norm, "modular_at_norm": at_norm, "p": dict(config.p.description)}
        if config.alpha is not None:
            payload["besov_norm"] = besov_norm(f, config.besov_params())
            payload["alpha"] = config.alpha
            payload["q"] = dict(config.q.description)
        return RunResult("norm", payload)

    def run_besov(self, config):
        if config.alpha is None:
            raise ConfigError("a value is required", "besov.alpha")
        params = config.besov_params()
        result = besov_seminorm(config.expansion, params)
        lebesgue = expansion_norm(config.expansion, config.p, config.rule)
        payload = {
            "alpha": params.alpha,
            "k": params.k,
            "seminorm": result.value,
            "residual": result.residual,
            "in_space": result.in_space,
            "lebesgue_norm": lebesgue,
            "besov_norm": lebesgue + result.value if math.isfinite(result.value) else math.inf,
            "grid": params.grid.to_dict(),
        }
        if params.q.is_infinite:
            sup = besov_infty_constant(config.expansion, params.alpha, params.k, params.p, params.grid, params.rule)
            payload.update({"maximizer": sup.maximizer, "at_boundary": sup.at_boundary})
        return RunResult("besov", payload, (("t", "g"), result.rows()))

    def run_op(self, config):
        if config.operator is None:
            raise ConfigError("an operator is required", "operator")
        spec = config.operator
        image = apply_operator(config.expansion, spec)
        reference = spectral_reference(config.expansion, spec)
        difference = float(np.max(np.abs(image.values - reference.values))) if image.coefficients else 0.0
        payload = {
            "operator": {"kind": spec.kind.value, "parameter": spec.parameter, "method": spec.method,
                         "derivative": spec.derivative},
            "expansion": image.to_dict(),
            "spectral": reference.to_dict(),
            "max_abs_difference": difference,
        }
        header = tuple(f"nu{i + 1}" for i in range(config.dimension)) + ("value", "spectral")
        rows = [tuple(index.entries) + (float(value), float(reference.coefficient(index)))
                for index, value in image.coefficients.items()]
        return RunResult("op", payload, (header, rows))

    def run_verify(self, config):
        service = VerificationService(config.defaults)
        reports = service.run(config.checks, config.dimension, config.refine, config.check_parameters,
                              grid=config.grid)
        passed = all(report.passed for report in reports)
        rows = [(report.name, _params_digest(report), float(report.ratio), report.bound, report.passed,
                 float(report.stability_delta)) for report in reports]
        payload = {"passed": passed, "reports": [report.to_dict() for report in reports]}
        failed = [report.name for report in reports if not report.passed]
        if failed:
            logging.warning(f"Failed checks: {', '.join(failed)}")
        header = ("check", "params_hash", "ratio", "bound", "pass", "stability_delta")
        return RunResult("verify", payload, (header, rows), 0 if passed else 1)


def _params_digest(report):
    return params_hash(report.params)


def exit_code_for(error):
    """The exit code contract: 2 for configuration and precondition errors, 3 for numerical failures"""
    if isinstance(error, ToolkitError) and not isinstance(error, (ConfigError, DomainError)):
        return 3
    return 2


__all__ = ["COMMANDS", "RUN_CONFIG_SCHEMA", "RunService", "apply_operator", "exit_code_for",
           "parse_expansion", "parse_run_config"]

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, NamedTuple, Optional

import numpy as np

from errors import DimensionMismatchError, DomainError


class MeasureKind(enum.Enum):
    GAUSSIAN = "gaussian"
    HAAR = "haar"
    LEBESGUE = "lebesgue"


class ExponentKind(enum.Enum):
    CONSTANT = "constant"
    RATIONAL_DECAY = "rational_decay"
    TABLE = "table"
    STEP = "step"
    CALLABLE = "callable"
    INFINITE = "infinite"


class OperatorKind(enum.Enum):
    ORNSTEIN_UHLENBECK = "ou"
    POISSON = "poisson"
    BESSEL_POTENTIAL = "bessel_potential"
    BESSEL_DERIVATIVE = "bessel_derivative"


BOUND_FINITE_STABLE = "finite+stable"


@dataclass(frozen=True, order=True)
class MultiIndex:
    entries: tuple

    def __post_init__(self):
        entries = tuple(int(e) for e in self.entries)
        if any(e < 0 for e in entries):
            raise DomainError(f"multi-index entries must be non-negative, got {entries}")
        if not entries:
            raise DomainError("multi-index must have at least one entry")
        object.__setattr__(self, 'entries', entries)

    @classmethod
    def of(cls, *entries):
        return cls(tuple(entries))

    @classmethod
    def zero(cls, dimension):
        return cls((0,) * dimension)

    @property
    def dimension(self):
        return len(self.entries)

    @property
    def order(self):
        return sum(self.entries)

    @property
    def factorial(self):
        return math.prod(math.factorial(e) for e in self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __str__(self):
        return "(" + ",".join(str(e) for e in self.entries) + ")"


@dataclass(frozen=True)
class HermiteExpansion:
    """
    A finite Hermite series sum_nu c_nu h_nu on R^d.

    Coefficients are kept sorted by multi-index so that iteration order, and
    therefore every sum over the expansion, is deterministic.
    """
    dimension: int
    coefficients: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension < 1:
            raise DomainError(f"dimension must be positive, got {self.dimension}")
        cleaned = {}
        for index, value in self.coefficients.items():
            if not isinstance(index, MultiIndex):
                index = MultiIndex(tuple(index))
            if index.dimension != self.dimension:
                raise DimensionMismatchError(self.dimension, index.dimension, what="multi-index")
            cleaned[index] = cleaned.get(index, 0.0) + float(value)
        object.__setattr__(self, 'coefficients', dict(sorted(cleaned.items())))

    @classmethod
    def zero(cls, dimension):
        return cls(dimension, {})

    @classmethod
    def basis(cls, index, coefficient=1.0):
        if not isinstance(index, MultiIndex):
            index = MultiIndex(tuple(index))
        return cls(index.dimension, {index: coefficient})

    @property
    def indices(self):
        return list(self.coefficients)

    @property
    def values(self):
        return np.array(list(self.coefficients.values()), dtype=float)

    @property
    def orders(self):
        return np.array([index.order for index in self.coefficients], dtype=float)

    @property
    def max_order(self):
        orders = [index.order for index, value in self.coefficients.items() if value != 0.0]
        return max(orders) if orders else 0

    @property
    def is_zero(self):
        return all(value == 0.0 for value in self.coefficients.values())

    def coefficient(self, index):
        if not isinstance(index, MultiIndex):
            index = MultiIndex(tuple(index))
        return self.coefficients.get(index, 0.0)

    def l2_norm(self):
        """L2(gamma_d) norm, the Euclidean norm of the coefficients"""
        return float(np.sqrt(np.sum(self.values ** 2)))

    def with_values(self, values):
        return HermiteExpansion(self.dimension, dict(zip(self.coefficients, np.asarray(values, dtype=float))))

    def apply_multiplier(self, multiplier):
        """Multiply each coefficient by multiplier(|nu|), evaluated on the array of orders"""
        if not self.coefficients:
            return self
        factors = np.asarray(multiplier(self.orders), dtype=float)
        return self.with_values(self.values * factors)

    def scale(self, c):
        return self.with_values(self.values * float(c))

    def _check_compatible(self, other):
        if other.dimension != self.dimension:
            raise DimensionMismatchError(self.dimension, other.dimension, what="expansion")

    def __add__(self, other):
        self._check_compatible(other)
        merged = dict(self.coefficients)
        for index, value in other.coefficients.items():
            merged[index] = merged.get(index, 0.0) + value
        return HermiteExpansion(self.dimension, merged)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def to_dict(self):
        return {
            "dimension": self.dimension,
            "coefficients": [
                {"index": list(index.entries), "value": value}
                for index, value in self.coefficients.items()
            ],
        }


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights integrating against gamma_d; weights sum to one"""
    dimension: int
    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def size(self):
        return len(self.weights)


@dataclass(frozen=True)
class TimeGrid:
    """Logarithmically spaced points on [t_min, t_max], carrying the Haar measure dt/t"""
    t_min: float
    t_max: float
    count: int

    def __post_init__(self):
        if not (self.t_min > 0 and self.t_max > self.t_min):
            raise DomainError(f"time grid needs 0 < t_min < t_max, got [{self.t_min}, {self.t_max}]")
        if self.count < 2:
            raise DomainError(f"time grid needs at least 2 points, got {self.count}")

    @property
    def points(self):
        return np.geomspace(self.t_min, self.t_max, self.count)

    @property
    def log_step(self):
        return math.log(self.t_max / self.t_min) / (self.count - 1)

    @property
    def haar_weights(self):
        """Trapezoid weights in log t, i.e. for integrals against dt/t"""
        weights = np.full(self.count, self.log_step)
        weights[0] *= 0.5
        weights[-1] *= 0.5
        return weights

    def refined(self, factor=2):
        """Same range with every interval split in `factor`; the old points are kept"""
        return TimeGrid(self.t_min, self.t_max, (self.count - 1) * int(factor) + 1)

    def coarsened(self):
        """Every other point; only defined when count - 1 is even"""
        if (self.count - 1) % 2:
            raise DomainError(f"cannot halve a grid with {self.count} points")
        return TimeGrid(self.t_min, self.t_max, (self.count - 1) // 2 + 1)

    def to_dict(self):
        return {"t_min": self.t_min, "t_max": self.t_max, "count": self.count}


@dataclass(frozen=True, eq=False)
class SubordinationQuadrature:
    """Nodes u and weights for integrals of phi(u) e^{-u} u^{-1/2} du over (0, inf)"""
    nodes: np.ndarray
    weights: np.ndarray
    mass_residual: float = 0.0


@dataclass(frozen=True, eq=False)
class ExponentFunction:
    """
    A variable exponent p(.) on R^d (domain GAUSSIAN) or q(.) on R+ (domain HAAR).

    The evaluator receives an (n, d) array of points for the R^d case and an
    (n,) array of times for the R+ case and returns an (n,) array.
    """
    kind: ExponentKind
    domain: MeasureKind
    evaluator: Optional[Callable] = None
    p_minus: float = 1.0
    p_plus: float = 1.0
    p_inf: float = 1.0
    p_zero: Optional[float] = None
    description: Mapping = field(default_factory=dict)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[0] if x.ndim > 0 else 1
        if self.kind is ExponentKind.INFINITE:
            return np.full(n, np.inf)
        values = np.asarray(self.evaluator(x), dtype=float)
        if values.ndim == 0:
            values = np.full(n, float(values))
        return values

    @property
    def is_infinite(self):
        return self.kind is ExponentKind.INFINITE

    @property
    def is_constant(self):
        return self.kind is ExponentKind.CONSTANT or self.p_minus == self.p_plus

    def conjugate(self):
        """p'(x) = p(x) / (p(x) - 1); needs p_- > 1"""
        if self.p_minus <= 1.0:
            raise DomainError(f"conjugate exponent needs p_- > 1, got {self.p_minus}")
        inner = self

        def evaluate(x):
            p = inner(x)
            return p / (p - 1.0)

        def conj(value):
            return None if value is None else value / (value - 1.0)

        return ExponentFunction(
            kind=ExponentKind.CONSTANT if self.is_constant else ExponentKind.CALLABLE,
            domain=self.domain,
            evaluator=evaluate,
            p_minus=conj(self.p_plus),
            p_plus=conj(self.p_minus),
            p_inf=conj(self.p_inf),
            p_zero=conj(self.p_zero),
            description={"kind": "conjugate", "of": dict(self.description)},
        )

    def harmonic(self, other):
        """The exponent p with 1/p = 1/self + 1/other"""
        first, second = self, other

        def evaluate(x):
            return 1.0 / (1.0 / first(x) + 1.0 / second(x))

        def combine(a, b):
            if a is None or b is None:
                return None
            return 1.0 / (1.0 / a + 1.0 / b)

        return ExponentFunction(
            kind=ExponentKind.CONSTANT if (self.is_constant and other.is_constant) else ExponentKind.CALLABLE,
            domain=self.domain,
            evaluator=evaluate,
            p_minus=combine(self.p_minus, other.p_minus),
            p_plus=combine(self.p_plus, other.p_plus),
            p_inf=combine(self.p_inf, other.p_inf),
            p_zero=combine(self.p_zero, other.p_zero),
            description={"kind": "harmonic", "of": [dict(self.description), dict(other.description)]},
        )


@dataclass(frozen=True, eq=False)
class DiscretizedFunction:
    """
    Sample magnitudes |f(x_i)| paired with the weights of the underlying measure.

    `points` are where the exponent is evaluated. When `tail_step` is set the
    samples sit on a TimeGrid with that log spacing and the norm routines add
    power-law tail estimates beyond both ends of the grid.
    """
    values: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    measure: MeasureKind = MeasureKind.GAUSSIAN
    tail_step: Optional[float] = None

    def __post_init__(self):
        values = np.abs(np.asarray(self.values, dtype=float))
        weights = np.asarray(self.weights, dtype=float)
        if values.shape != weights.shape:
            raise DimensionMismatchError(weights.shape, values.shape, what="sample vector")
        if np.any(weights <= 0):
            raise DomainError("measure weights must be positive")
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'weights', weights)

    @property
    def is_zero(self):
        return not np.any(self.values > 0)

    def with_values(self, values):
        return DiscretizedFunction(values, self.weights, self.points, self.measure, self.tail_step)

    def scale(self, c):
        return self.with_values(self.values * abs(float(c)))


@dataclass(frozen=True)
class BesselOrder:
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"Bessel order needs beta > 0, got {self.beta}")

    @property
    def k(self):
        # smallest integer with k - 1 <= beta < k
        return math.floor(self.beta) + 1


@dataclass(frozen=True)
class ForwardDifference:
    order: int
    increment: float
    base: float = 0.0

    def __post_init__(self):
        if self.order < 1:
            raise DomainError(f"forward difference order must be >= 1, got {self.order}")
        if not self.increment > 0:
            raise DomainError(f"forward difference increment must be > 0, got {self.increment}")
        if self.base < 0:
            raise DomainError(f"forward difference base point must be >= 0, got {self.base}")

    @property
    def points(self):
        """The abscissae t + (k - j) s for j = 0..k"""
        return [self.base + (self.order - j) * self.increment for j in range(self.order + 1)]

    @property
    def coefficients(self):
        return [math.comb(self.order, j) * (-1) ** j for j in range(self.order + 1)]


@dataclass(frozen=True, eq=False)
class BesovParams:
    alpha: float
    p: ExponentFunction
    q: ExponentFunction
    grid: TimeGrid
    rule: Optional[QuadratureRule] = None
    k: Optional[int] = None

    def __post_init__(self):
        if self.alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        k = self.k if self.k is not None else math.floor(self.alpha) + 1
        if k <= self.alpha:
            raise DomainError(f"k must exceed alpha, got k={k}, alpha={self.alpha}")
        object.__setattr__(self, 'k', int(k))
        if self.p.is_infinite or not (1.0 < self.p.p_minus <= self.p.p_plus < math.inf):
            raise DomainError(f"need 1 < p_- <= p_+ < inf, got [{self.p.p_minus}, {self.p.p_plus}]")
        if not self.q.is_infinite and self.q.p_minus < 1.0:
            raise DomainError(f"q must have q_- >= 1, got {self.q.p_minus}")

    def with_grid(self, grid):
        return BesovParams(self.alpha, self.p, self.q, grid, self.rule, self.k)

    def with_alpha(self, alpha, k=None):
        return BesovParams(alpha, self.p, self.q, self.grid, self.rule, k if k is not None else self.k)


@dataclass(frozen=True, eq=False)
class SeminormResult:
    value: float
    times: np.ndarray
    trace: np.ndarray
    residual: float
    in_space: bool = True
    maximizer: Optional[float] = None
    at_boundary: bool = False

    def rows(self):
        """(t, g(t)) pairs for the CSV writer"""
        return [(float(t), float(g)) for t, g in zip(self.times, self.trace)]


@dataclass(frozen=True, eq=False)
class SupremumResult:
    value: float
    maximizer: float
    at_boundary: bool


class LogHolderConstants(NamedTuple):
    local: float
    decay: float


@dataclass(frozen=True, eq=False)
class VerificationReport:
    name: str
    params: Mapping
    ratio: float
    bound: Any
    passed: bool
    witness: Any = None
    stability_delta: float = 0.0
    slack: float = 0.05
    lower_bound: Optional[float] = None
    flags: tuple = ()
    details: Mapping = field(default_factory=dict)

    @property
    def vacuous(self):
        return "vacuous" in self.flags

    def recompute_pass(self):
        """Re-derive the pass flag from the stored fields alone"""
        if "failed" in self.flags:
            return False
        if self.vacuous:
            return True
        if not math.isfinite(self.ratio):
            return False
        if self.lower_bound is not None and self.ratio < self.lower_bound:
            return False
        if self.bound == BOUND_FINITE_STABLE:
            return self.stability_delta <= self.slack
        return self.ratio <= float(self.bound)

    def to_dict(self):
        return {
            "name": self.name,
            "params": dict(self.params),
            "ratio": self.ratio,
            "bound": self.bound,
            "lower_bound": self.lower_bound,
            "passed": self.passed,
            "witness": self.witness,
            "stability_delta": self.stability_delta,
            "slack": self.slack,
            "flags": list(self.flags),
            "details": dict(self.details),
        }


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    kind: OperatorKind
    parameter: float
    method: str = "spectral"
    derivative: int = 0


@dataclass(frozen=True, eq=False)
class RunConfig:
    """A parsed run configuration; every field is already validated"""
    dimension: int
    expansion: HermiteExpansion
    p: ExponentFunction
    q: ExponentFunction
    grid: TimeGrid
    rule: QuadratureRule
    points: np.ndarray
    alpha: Optional[float] = None
    k: Optional[int] = None
    operator: Optional[OperatorSpec] = None
    checks: Optional[tuple] = None
    check_parameters: Mapping = field(default_factory=dict)
    seed: int = 0
    refine: int = 1
    defaults: Mapping = field(default_factory=dict)

    def besov_params(self):
        return BesovParams(self.alpha, self.p, self.q, self.grid, self.rule, self.k)


@dataclass(frozen=True, eq=False)
class RunResult:
    """What a subcommand produced: a JSON payload, an optional CSV table and the exit code"""
    command: str
    payload: Mapping
    table: Optional[tuple] = None
    exit_code: int = 0

"""Domain vocabulary: prices, budgets, bundles, observations and valuations.

Price vectors and bundles are plain float64 numpy arrays; ``as_prices`` and
``as_bundle`` validate them at the boundaries.  Everything else is a frozen
dataclass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

PriceVector = NDArray[np.float64]
Bundle = NDArray[np.float64]

BUDGET_TOL = 1e-9


def as_prices(prices: ArrayLike) -> PriceVector:
    p = np.array(prices, dtype=np.float64).reshape(-1)
    if p.size < 1:
        raise ValueError("price vector must have at least one good")
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise ValueError(f"prices must be finite and strictly positive, got {p}")
    return p


def as_bundle(quantities: ArrayLike, tol: float = 0.0) -> Bundle:
    x = np.array(quantities, dtype=np.float64).reshape(-1)
    if np.any(x < -tol) or np.any(x > 1 + tol):
        raise ValueError(f"bundle quantities must lie in [0, 1], got {x}")
    return np.clip(x, 0.0, 1.0)


def _check_dims(a: NDArray, b: NDArray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


@dataclass(frozen=True)
class Example:
    """A price vector paired with a budget."""

    prices: PriceVector
    budget: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "prices", as_prices(self.prices))
        if not self.budget >= 0:
            raise ValueError(f"budget must be nonnegative, got {self.budget}")
        object.__setattr__(self, "budget", float(self.budget))

    @property
    def n(self) -> int:
        return self.prices.size


@dataclass(frozen=True)
class Observation:
    """An example together with the bundle the agent chose for it."""

    example: Example
    bundle: Bundle

    def __post_init__(self) -> None:
        x = as_bundle(self.bundle, tol=1e-12)
        _check_dims(self.example.prices, x)
        cost = float(self.example.prices @ x)
        if cost > self.example.budget + BUDGET_TOL:
            raise ValueError(f"bundle cost {cost} exceeds budget {self.example.budget}")
        object.__setattr__(self, "bundle", x)

    @property
    def prices(self) -> PriceVector:
        return self.example.prices

    @property
    def budget(self) -> float:
        return self.example.budget


@dataclass(frozen=True)
class LinearValuation:
    """Additive utility: each full unit of good i is worth ``values[i]``."""

    values: NDArray[np.float64]
    normalized: bool = False

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if v.size < 1 or np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError(f"linear values must be finite and nonnegative, got {v}")
        if self.normalized and np.any(v > 1):
            raise ValueError("normalized linear values must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class SeparableConcaveValuation:
    """Per-good quadratics v_i(x) = a_i x - (b_i / 2) x^2 on [0, 1].

    ``a >= b >= 0`` keeps every marginal value v'_i(x) = a_i - b_i x
    nonnegative on the unit interval.
    """

    a: NDArray[np.float64]
    b: NDArray[np.float64]

    def __post_init__(self) -> None:
        a = np.array(self.a, dtype=np.float64).reshape(-1)
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        _check_dims(a, b)
        if a.size < 1:
            raise ValueError("valuation needs at least one good")
        if np.any(b < 0) or np.any(a < b):
            raise ValueError("separable valuation requires a_i >= b_i >= 0")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def Q(self) -> float:
        """Largest second-derivative magnitude over all goods."""
        return float(self.b.max())

    def derivative(self, x: ArrayLike) -> NDArray[np.float64]:
        return self.a - self.b * np.asarray(x, dtype=np.float64)

    def derivative_at(self, i: int, x: float) -> float:
        return float(self.a[i] - self.b[i] * x)

    def scaled(self, factor: float) -> SeparableConcaveValuation:
        return SeparableConcaveValuation(self.a * factor, self.b * factor)

    @classmethod
    def from_linear(cls, values: ArrayLike) -> SeparableConcaveValuation:
        v = np.asarray(values, dtype=np.float64)
        return cls(v, np.zeros_like(v))


Valuation = LinearValuation | SeparableConcaveValuation


@dataclass(frozen=True)
class ExampleDistribution:
    """Coordinatewise-uniform law over prices and budget."""

    n: int
    p_min: float
    p_max: float
    B_min: float
    B_max: float
    law: str = field(default="uniform", compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("distribution needs n >= 1")
        if not (0 < self.p_min <= self.p_max):
            raise ValueError("need 0 < p_min <= p_max")
        if not (0 <= self.B_min <= self.B_max):
            raise ValueError("need 0 <= B_min <= B_max")
        if self.law != "uniform":
            raise ValueError(f"unsupported sampling law {self.law!r}")

    @property
    def M(self) -> float:
        """Largest ratio between two prices in the support."""
        return self.p_max / self.p_min

    @property
    def max_budget_ratio(self) -> float:
        """Largest B / p_j over the support."""
        return self.B_max / self.p_min


def sample_example(dist: ExampleDistribution, rng: np.random.Generator) -> Example:
    prices = rng.uniform(dist.p_min, dist.p_max, size=dist.n)
    budget = rng.uniform(dist.B_min, dist.B_max)
    return Example(prices, budget)


def bundle_value_linear(v: LinearValuation, x: ArrayLike) -> float:
    x = np.asarray(x, dtype=np.float64)
    _check_dims(v.values, x)
    return float(v.values @ x)


def bundle_value_separable(v: SeparableConcaveValuation, x: ArrayLike) -> float:
    x = np.asarray(x, dtype=np.float64)
    _check_dims(v.a, x)
    return float(np.sum(v.a * x - 0.5 * v.b * x * x))


def bundle_value(v: Valuation, x: ArrayLike) -> float:
    if isinstance(v, LinearValuation):
        return bundle_value_linear(v, x)
    return bundle_value_separable(v, x)

"""Derivative-ratio learner for separable concave utilities.

Each good's marginal value is sampled at k + 1 grid points,
V(i, l) = v_i'(l / k), and the learner bounds the pairwise ratios of these
n (k + 1) unknowns the same way the linear learner bounds value ratios.
Two sentinels complete every good's grid: V(i, -1) = inf and
V(i, k + 1) = 0.  They are resolved symbolically and never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike

from revpref.ratio_bounds import IMPLY_RTOL, RatioBoundMatrix
from revpref.types import (
    Bundle,
    Observation,
    SeparableConcaveValuation,
    as_prices,
    bundle_value_separable,
)

_BUDGET_RTOL = 1e-12


def _ceil(x: float) -> int:
    # guards against 40.000000000000007-style round-off
    return math.ceil(x - 1e-9 * max(1.0, abs(x)))


def choose_k(Q: float, epsilon: float, max_budget_ratio: float) -> int:
    """Grid resolution max(ceil(2 Q / eps * max B/p_j), ceil(1 / eps))."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if Q < 0 or max_budget_ratio <= 0:
        raise ValueError("need Q >= 0 and a positive budget ratio")
    return max(_ceil(2 * Q / epsilon * max_budget_ratio), _ceil(1 / epsilon), 1)


def required_samples_separable(n: int, k: int, delta: float, C: float = 1.0) -> int:
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    entities = n * (k + 2)
    return math.ceil(C * entities**2 * math.log(entities**2 / delta) / delta)


@dataclass(frozen=True)
class ThresholdAssignment:
    """Per-good grid thresholds l_i in {-1, ..., k}.

    ``pivot`` is the (good, threshold) guess that produced the assignment,
    or None for the trivial all-or-nothing assignments.
    """

    levels: np.ndarray
    pivot: tuple[int, int] | None = None


class DerivativeGrid:
    def __init__(self, n: int, k: int, bounds: RatioBoundMatrix | None = None):
        if n < 1 or k < 1:
            raise ValueError("need n >= 1 and k >= 1")
        self.n = n
        self.k = k
        self.bounds = bounds if bounds is not None else RatioBoundMatrix(n * (k + 1))
        if self.bounds.N != n * (k + 1):
            raise ValueError("bound matrix size does not match n (k + 1)")
        self.bounds.add_monotonicity_chain(
            [self.node(i, l) for l in range(k + 1)] for i in range(n)
        )

    def node(self, i: int, l: int) -> int:
        return i * (self.k + 1) + l

    def update(self, obs: Observation) -> None:
        """Tighten derivative-ratio bounds from one optimal bundle.

        For x_i > x_j the optimality conditions give
        V(i, floor(k x_i)) / p_i >= V(j, ceil(k x_j)) / p_j.  When both goods
        are also interior the reverse inequality holds at the outer grid
        points, V(i, ceil(k x_i)) / V(j, floor(k x_j)) <= p_i / p_j.
        """
        x, p, k = obs.bundle, obs.prices, self.k
        if x.size != self.n:
            raise ValueError("observation dimension mismatch")
        lo = np.minimum(np.floor(k * x), k).astype(int)
        hi = np.minimum(np.ceil(k * x), k).astype(int)
        for i, j in zip(*np.nonzero(x[:, None] > x[None, :])):
            ratio = p[i] / p[j]
            self.bounds.tighten_lower(self.node(i, lo[i]), self.node(j, hi[j]), ratio)
            if x[i] < 1 and x[j] > 0:
                self.bounds.tighten_upper(self.node(i, hi[i]), self.node(j, lo[j]), ratio)

    def fit(self, observations: Iterable[Observation]) -> DerivativeGrid:
        for obs in observations:
            self.update(obs)
        return self

    def _log_lower(self) -> np.ndarray:
        return -self.bounds.closure()

    def _implies(self, G: np.ndarray, logp: np.ndarray, levels: np.ndarray) -> bool:
        """Pairwise property: V(a, l_a) / p_a >= V(b, l_b + 1) / p_b for all a != b."""
        k = self.k
        for a in range(self.n):
            if levels[a] < 0:
                continue
            for b in range(self.n):
                if a == b or levels[b] + 1 > k:
                    continue
                lhs = G[self.node(a, levels[a]), self.node(b, levels[b] + 1)]
                if lhs < logp[a] - logp[b] - IMPLY_RTOL:
                    return False
        return True

    def find_thresholds(self, prices: ArrayLike, budget: float) -> ThresholdAssignment | None:
        """Search for thresholds satisfying the pairwise and budget-sandwich properties.

        Guesses the good i maximizing V(i, l_i + 1) / p_i together with its
        threshold, derives each other good's admissible range from
        implications against that pivot, then raises thresholds greedily
        while the base bundle stays affordable.  Returns None if no guess
        works.
        """
        p = as_prices(prices)
        n, k = self.n, self.k
        if p.size != n:
            raise ValueError("price dimension mismatch")
        # budget beyond the price of everything cannot be spent
        B = min(float(budget), float(p.sum()))
        tol = _BUDGET_RTOL * max(1.0, B)

        if B <= 0:
            return ThresholdAssignment(np.full(n, -1))

        G = self._log_lower()
        logp = np.log(p)
        grid = np.arange(k + 1)

        def base_cost(levels: np.ndarray) -> float:
            return float(p @ np.maximum(levels, 0)) / k

        def top_cost(levels: np.ndarray) -> float:
            return float(p @ np.minimum(levels + 1, k)) / k

        for i in range(n):
            for li in range(-1, k + 1):
                low = np.empty(n, dtype=int)
                high = np.empty(n, dtype=int)
                if li == k:
                    low[:] = k
                    high[:] = k
                else:
                    ref = self.node(i, li + 1)
                    for j in range(n):
                        cols = j * (k + 1) + grid
                        above = G[cols, ref] >= logp[j] - logp[i] - IMPLY_RTOL
                        below = G[ref, cols] >= logp[i] - logp[j] - IMPLY_RTOL
                        high[j] = grid[above].max() if above.any() else -1
                        low[j] = (grid[below].min() if below.any() else k + 1) - 1
                low[i] = high[i] = li
                if np.any(low > high):
                    continue

                levels = low.copy()
                cost = base_cost(levels)
                if cost > B + tol:
                    continue
                for j in range(n):
                    while levels[j] < high[j]:
                        step = p[j] / k if levels[j] >= 0 else 0.0
                        if cost + step > B + tol:
                            break
                        levels[j] += 1
                        cost += step

                if top_cost(levels) < B - tol:
                    continue
                if self._implies(G, logp, levels):
                    return ThresholdAssignment(levels, (i, li))
        return None

    def bundle_from_thresholds(
        self, thresholds: ThresholdAssignment, prices: ArrayLike, budget: float
    ) -> Bundle:
        """Buy max(l_i, 0) / k of each good, then equal extra quantities of goods with 0 <= l_i < k."""
        p = as_prices(prices)
        levels = thresholds.levels
        x = np.maximum(levels, 0) / self.k
        residual = float(budget) - float(p @ x)
        active = np.flatnonzero((levels >= 0) & (levels < self.k))
        while residual > 1e-15 and active.size:
            q = residual / p[active].sum()
            room = 1.0 - x[active]
            add = np.minimum(q, room)
            x[active] += add
            residual -= float(p[active] @ add)
            active = active[add < room]
        return x

    def predict_with_status(
        self, prices: ArrayLike, budget: float, rng: np.random.Generator | None = None
    ) -> tuple[Bundle, bool]:
        thresholds = self.find_thresholds(prices, budget)
        if thresholds is not None:
            return self.bundle_from_thresholds(thresholds, prices, budget), True
        rng = rng if rng is not None else np.random.default_rng()
        return random_feasible_bundle(as_prices(prices), budget, rng), False

    def predict(
        self, prices: ArrayLike, budget: float, rng: np.random.Generator | None = None
    ) -> Bundle:
        return self.predict_with_status(prices, budget, rng)[0]

    def derivative_values(self, v: SeparableConcaveValuation) -> np.ndarray:
        """True V(i, l) for every finite node, in node order."""
        frac = np.arange(self.k + 1) / self.k
        return (v.a[:, None] - v.b[:, None] * frac[None, :]).reshape(-1)

    def to_dict(self) -> dict:
        return {"learner": "separable", "n": self.n, "k": self.k, **self.bounds.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> DerivativeGrid:
        return cls(int(data["n"]), int(data["k"]), RatioBoundMatrix.from_dict(data))


def random_feasible_bundle(p: np.ndarray, budget: float, rng: np.random.Generator) -> Bundle:
    x = rng.uniform(size=p.size)
    cost = float(p @ x)
    if cost > budget:
        x *= budget / cost
    return x


def train(observations: Iterable[Observation], n: int, k: int) -> DerivativeGrid:
    grid = DerivativeGrid(n, k).fit(observations)
    grid.bounds.closure()
    return grid


def near_optimal(
    v: SeparableConcaveValuation, predicted: ArrayLike, optimal: ArrayLike, epsilon: float
) -> bool:
    """Either every quantity is within epsilon below optimal, or the value is."""
    x_hat = np.asarray(predicted)
    x_star = np.asarray(optimal)
    if np.all(x_hat >= x_star - epsilon):
        return True
    return bundle_value_separable(v, x_hat) >= bundle_value_separable(v, x_star) - epsilon

"""Pairwise value-ratio learner for linear utilities."""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike

from revpref.oracle import solve_linear
from revpref.ratio_bounds import RatioBoundMatrix
from revpref.types import Bundle, Observation, as_prices


def required_samples(n: int, delta: float, C: float = 1.0) -> int:
    """Training-set size ceil(C n^2 ln(n^2 / delta) / delta)."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n < 1 or C <= 0:
        raise ValueError("need n >= 1 and C > 0")
    return math.ceil(C * n * n * math.log(n * n / delta) / delta)


def observation_bounds(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Lower bounds on v_i / v_j implied by one optimal bundle (0 where none)."""
    prefer = x[:, None] > x[None, :]
    return np.where(prefer, p[:, None] / p[None, :], 0.0)


class AllPairsLearner:
    """Learns bounds L_ij <= v_i / v_j <= U_ij from observed optimal bundles.

    Whenever good i is bought in strictly larger quantity than good j, the
    agent must rank i ahead of j, so v_i / v_j >= p_i / p_j.  Prediction
    picks any value vector inside the learned bounds and solves the
    knapsack with it.
    """

    def __init__(self, n: int, bounds: RatioBoundMatrix | None = None):
        self.n = n
        self.bounds = bounds if bounds is not None else RatioBoundMatrix(n)
        if self.bounds.N != n:
            raise ValueError("bound matrix size does not match n")
        self._hypothesis: np.ndarray | None = None

    def update(self, obs: Observation) -> bool:
        if obs.prices.size != self.n:
            raise ValueError("observation dimension mismatch")
        changed = self.bounds.tighten_lower_many(observation_bounds(obs.bundle, obs.prices))
        if changed:
            self._hypothesis = None
        return changed

    def fit(self, observations: Iterable[Observation]) -> AllPairsLearner:
        for obs in observations:
            self.update(obs)
        return self

    def hypothesis(self) -> np.ndarray:
        """Max-normalized value vector consistent with every learned bound."""
        if self._hypothesis is None:
            self._hypothesis = self.bounds.consistent_vector()
        return self._hypothesis

    def predict(self, prices: ArrayLike, budget: float) -> Bundle:
        return solve_linear(self.hypothesis(), as_prices(prices), budget)

    def certifies(self, prices: ArrayLike, bundle: ArrayLike) -> bool:
        """Whether the bounds pin down every preference that ``bundle`` reveals."""
        p = as_prices(prices)
        x = np.asarray(bundle)
        for i, j in zip(*np.nonzero(x[:, None] > x[None, :])):
            if not self.bounds.implies_geq(i, j, p[i] / p[j]):
                return False
        return True

    def to_dict(self) -> dict:
        return {"learner": "all_pairs", "n": self.n, **self.bounds.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> AllPairsLearner:
        return cls(int(data["n"]), RatioBoundMatrix.from_dict(data))


def train(observations: Iterable[Observation], n: int | None = None) -> AllPairsLearner:
    observations = list(observations)
    if n is None:
        if not observations:
            raise ValueError("cannot infer n from an empty observation list")
        n = observations[0].prices.size
    learner = AllPairsLearner(n).fit(observations)
    learner.bounds.closure()  # surfaces contradictory observations now
    return learner

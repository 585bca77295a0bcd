"""Pairwise ratio bounds over N positive unknowns.

Stores lower bounds ``L[i, j] <= y_i / y_j``; the upper bounds are the
reciprocal view ``U[i, j] = 1 / L[j, i]``, so the two can never disagree.
Implication queries and consistent vectors come from an all-pairs
shortest-path closure of the log-space difference-constraint graph:
an edge i -> j of weight ``-log L[i, j]`` encodes ``z_j <= z_i - log L[i, j]``
with ``z = log y``.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

IMPLY_RTOL = 1e-9
CYCLE_TOL = 1e-9


class InconsistentBoundsError(ValueError):
    """The stored bounds admit no positive solution."""


def shortest_path_closure(weights: NDArray[np.float64]) -> NDArray[np.float64]:
    """Floyd-Warshall over a dense weight matrix (``inf`` = no edge)."""
    dist = weights.copy()
    np.fill_diagonal(dist, np.minimum(np.diag(dist), 0.0))
    for k in range(dist.shape[0]):
        np.minimum(dist, dist[:, k, None] + dist[None, k, :], out=dist)
    return dist


class RatioBoundMatrix:
    def __init__(self, N: int):
        if N < 1:
            raise ValueError("need at least one entity")
        self.N = N
        self._lower = np.zeros((N, N))
        np.fill_diagonal(self._lower, 1.0)
        self._closure: NDArray[np.float64] | None = None

    @property
    def L(self) -> NDArray[np.float64]:
        return self._lower.copy()

    @property
    def U(self) -> NDArray[np.float64]:
        with np.errstate(divide="ignore"):
            return 1.0 / self._lower.T

    def tighten_lower(self, i: int, j: int, c: float) -> bool:
        """Record y_i / y_j >= c."""
        if not c > 0:
            raise ValueError(f"ratio bound must be positive, got {c}")
        if i == j or c <= self._lower[i, j]:
            return False
        self._lower[i, j] = c
        self._closure = None
        return True

    def tighten_upper(self, i: int, j: int, c: float) -> bool:
        """Record y_i / y_j <= c."""
        if not c > 0:
            raise ValueError(f"ratio bound must be positive, got {c}")
        if i == j or 1.0 / c <= self._lower[j, i]:
            return False
        self._lower[j, i] = 1.0 / c
        self._closure = None
        return True

    def tighten_lower_many(self, candidates: NDArray[np.float64]) -> bool:
        """Entrywise max with an N x N matrix of lower bounds (0 = no bound)."""
        changed = candidates > self._lower
        np.fill_diagonal(changed, False)
        if not changed.any():
            return False
        self._lower[changed] = candidates[changed]
        self._closure = None
        return True

    def add_monotonicity_chain(self, groups: Iterable[Sequence[int]]) -> None:
        """For each sequence, require y_{e0} >= y_{e1} >= ... ."""
        for chain in groups:
            for prev, nxt in zip(chain, chain[1:]):
                self.tighten_lower(prev, nxt, 1.0)

    def closure(self) -> NDArray[np.float64]:
        """Shortest-path distances; ``-closure()[i, j]`` is the tightest log lower bound on y_i/y_j."""
        if self._closure is None:
            with np.errstate(divide="ignore"):
                weights = -np.log(self._lower)
            dist = shortest_path_closure(weights)
            if np.any(np.diag(dist) < -CYCLE_TOL):
                raise InconsistentBoundsError("ratio bounds contain a contradictory cycle")
            np.fill_diagonal(dist, 0.0)
            self._closure = dist
        return self._closure

    def implied_lower(self, i: int, j: int) -> float:
        """Tightest lower bound on y_i / y_j derivable from all stored bounds."""
        return float(np.exp(-self.closure()[i, j]))

    def implies_geq(self, i: int, j: int, c: float) -> bool:
        if not c > 0:
            raise ValueError(f"query ratio must be positive, got {c}")
        return bool(-self.closure()[i, j] >= np.log(c) - IMPLY_RTOL)

    def consistent_vector(self) -> NDArray[np.float64]:
        """A positive vector meeting every bound, scaled so its max is 1.

        Averages (in log space) the two extreme solutions of the
        difference-constraint system, so bounded ratios land strictly
        inside their intervals.
        """
        dist = self.closure()
        low = dist.min(axis=0)
        high = (-dist).max(axis=1)
        z = 0.5 * (low + high)
        y = np.exp(z - z.max())
        return y

    def check(self, y: NDArray[np.float64], rtol: float = 1e-9) -> bool:
        """Whether ``y`` satisfies every stored bound up to ``rtol``."""
        ratios = y[:, None] / y[None, :]
        return bool(np.all(ratios >= self._lower * (1 - rtol)))

    def copy(self) -> RatioBoundMatrix:
        other = RatioBoundMatrix(self.N)
        other._lower = self._lower.copy()
        other._closure = None if self._closure is None else self._closure.copy()
        return other

    def to_dict(self) -> dict:
        U = self.U
        return {
            "N": self.N,
            "L": self._lower.tolist(),
            "U": [[None if np.isinf(u) else float(u) for u in row] for row in U],
        }

    @classmethod
    def from_dict(cls, data: dict) -> RatioBoundMatrix:
        bounds = cls(int(data["N"]))
        lower = np.array(data["L"], dtype=np.float64)
        if lower.shape != (bounds.N, bounds.N):
            raise ValueError("L has the wrong shape")
        upper = np.array([[np.inf if u is None else u for u in row] for row in data["U"]])
        with np.errstate(divide="ignore"):
            from_upper = np.where(np.isinf(upper.T), 0.0, 1.0 / upper.T)
        # U normally mirrors L; only a materially tighter entry overrides it
        bounds._lower = np.where(from_upper > lower * (1 + 1e-12), from_upper, lower)
        np.fill_diagonal(bounds._lower, 1.0)
        return bounds

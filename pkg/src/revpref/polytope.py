"""Interactive cutting-plane learner for linear utilities.

The hypothesis set is a polytope K inside the unit box, cut by homogeneous
halfspaces ``a . v >= 0``.  Hypotheses are drawn approximately uniformly
from K by hit-and-run; rejected proposals come back with witness pairs that
become new cuts.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linprog

from revpref.oracle import Feedback, solve_linear, witness_margin
from revpref.types import Bundle, ExampleDistribution, as_prices, sample_example

log = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-12


class EmptyChordError(RuntimeError):
    """The polytope has collapsed below numerical tolerance around the walker."""


@dataclass(frozen=True)
class Halfspace:
    """Constraint ``coefficients . v >= bound``.

    Feedback cuts are homogeneous (bound 0) and carry the witness pair
    (i, j) and the prices they came from; their coefficients are p_j at i
    and -p_i at j, i.e. v_i / p_i >= v_j / p_j.
    """

    coefficients: NDArray[np.float64]
    kind: str = "feedback"
    pair: tuple[int, int] | None = None
    prices: NDArray[np.float64] | None = None
    bound: float = 0.0

    @classmethod
    def from_pair(cls, i: int, j: int, prices: ArrayLike) -> Halfspace:
        p = as_prices(prices)
        a = np.zeros_like(p)
        a[i] = p[j]
        a[j] = -p[i]
        return cls(a, "feedback", (i, j), p)

    def holds(self, v: ArrayLike, tol: float = 0.0) -> bool:
        return bool(self.coefficients @ np.asarray(v) >= self.bound - tol)

    @property
    def ratio(self) -> float:
        """Lower bound this cut places on v_i / v_j."""
        i, j = self.pair
        return -self.coefficients[j] / self.coefficients[i]


class Polytope:
    """Unit box intersected with homogeneous halfspaces, plus a walker position."""

    def __init__(
        self,
        n: int,
        halfspaces: Sequence[Halfspace] = (),
        interior: ArrayLike | None = None,
    ):
        self.n = n
        self.halfspaces: list[Halfspace] = list(halfspaces)
        self._refresh_matrix()
        if interior is None:
            interior = self.chebyshev_center()[0]
        self.interior = np.array(interior, dtype=np.float64)

    @classmethod
    def unit_box(cls, n: int) -> Polytope:
        return cls(n, (), np.full(n, 0.5))

    def _refresh_matrix(self) -> None:
        if self.halfspaces:
            self.A = np.array([h.coefficients for h in self.halfspaces])
        else:
            self.A = np.zeros((0, self.n))
        self.b = np.array([h.bound for h in self.halfspaces], dtype=np.float64)

    def copy(self) -> Polytope:
        return Polytope(self.n, self.halfspaces, self.interior.copy())

    def contains(self, v: ArrayLike, tol: float = MEMBERSHIP_TOL) -> bool:
        v = np.asarray(v)
        if np.any(v < -tol) or np.any(v > 1 + tol):
            return False
        return bool(np.all(self.A @ v >= self.b - tol))

    def slack(self, v: ArrayLike) -> float:
        """Smallest constraint slack at ``v`` (box included); positive means strictly inside."""
        v = np.asarray(v)
        parts = [v.min(), (1 - v).min()]
        if len(self.A):
            parts.append((self.A @ v - self.b).min())
        return float(min(parts))

    def chebyshev_center(self) -> tuple[NDArray[np.float64], float]:
        """Center and radius of the largest ball inside the polytope."""
        n = self.n
        norms = np.linalg.norm(self.A, axis=1) if len(self.A) else np.zeros(0)
        # maximize r  s.t.  -A x + |a| r <= -b,  -x + r <= 0,  x + r <= 1
        A_ub = np.vstack(
            [
                np.hstack([-self.A, norms[:, None]]),
                np.hstack([-np.eye(n), np.ones((n, 1))]),
                np.hstack([np.eye(n), np.ones((n, 1))]),
            ]
        )
        b_ub = np.concatenate([-self.b, np.zeros(n), np.ones(n)])
        c = np.zeros(n + 1)
        c[-1] = -1.0
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * (n + 1), method="highs")
        if res.status != 0 or res.x[-1] <= MEMBERSHIP_TOL:
            raise EmptyChordError("polytope has no interior")
        return res.x[:n], float(res.x[-1])

    def add(self, new: Sequence[Halfspace]) -> int:
        """Add cuts, keeping only the tightest cut per witness pair.

        Cuts on the same ordered pair are nested (larger p_i / p_j is
        stronger), so weaker ones are dropped.  Cuts without a pair are
        kept as given.  Re-centers the walker.  Returns the number of cuts
        that tightened the body.
        """
        best: dict[tuple[int, int], Halfspace] = {}
        other = [h for h in self.halfspaces if h.pair is None]
        for h in self.halfspaces:
            if h.pair is not None:
                best[h.pair] = h
        added = 0
        for h in new:
            if h.pair is None:
                other.append(h)
                added += 1
                continue
            old = best.get(h.pair)
            if old is None or h.ratio > old.ratio * (1 + MEMBERSHIP_TOL):
                best[h.pair] = h
                added += 1
        if added:
            self.halfspaces = other + sorted(best.values(), key=lambda h: h.pair)
            self._refresh_matrix()
            if self.slack(self.interior) <= MEMBERSHIP_TOL:
                self.interior = self.chebyshev_center()[0]
        return added

    def to_dict(self) -> dict:
        return {
            "learner": "polytope",
            "n": self.n,
            "halfspaces": [
                {
                    "coefficients": h.coefficients.tolist(),
                    "bound": h.bound,
                    "kind": h.kind,
                    "pair": None if h.pair is None else list(h.pair),
                    "prices": None if h.prices is None else h.prices.tolist(),
                }
                for h in self.halfspaces
            ],
            "interior": self.interior.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> Polytope:
        halfspaces = [
            Halfspace(
                np.array(h["coefficients"], dtype=float),
                h.get("kind", "feedback"),
                None if h.get("pair") is None else tuple(h["pair"]),
                None if h.get("prices") is None else np.array(h["prices"], dtype=float),
                float(h.get("bound", 0.0)),
            )
            for h in data["halfspaces"]
        ]
        return cls(int(data["n"]), halfspaces, data.get("interior"))


def _stacked(K: Polytope) -> tuple[NDArray, NDArray]:
    """All constraints of K as ``G x <= h`` (box rows first)."""
    eye = np.eye(K.n)
    G = np.vstack([-eye, eye, -K.A])
    h = np.concatenate([np.zeros(K.n), np.ones(K.n), -K.b])
    return G, h


def chord(K: Polytope, x: NDArray, d: NDArray) -> tuple[NDArray, NDArray]:
    """Parameter range [lo, hi] with x + t d inside K, row-wise over chains."""
    G, h = _stacked(K)
    return _chord(G, h, np.atleast_2d(x), np.atleast_2d(d))


def _chord(G: NDArray, h: NDArray, x: NDArray, d: NDArray) -> tuple[NDArray, NDArray]:
    slack = np.maximum(h - x @ G.T, 0.0)
    gd = d @ G.T
    with np.errstate(divide="ignore", invalid="ignore"):
        t = slack / gd
    hi = np.where(gd > 0, t, np.inf).min(axis=1)
    lo = np.where(gd < 0, t, -np.inf).max(axis=1)
    return lo, hi


def walk(
    K: Polytope, start: NDArray, steps: int, rng: np.random.Generator
) -> NDArray[np.float64]:
    """Run hit-and-run chains from each row of ``start`` (shape (chains, n))."""
    x = np.array(start, dtype=np.float64, copy=True)
    G, h = _stacked(K)
    directions = rng.standard_normal((steps,) + x.shape)
    directions /= np.linalg.norm(directions, axis=2, keepdims=True)
    offsets = rng.random((steps, x.shape[0]))
    for d, u in zip(directions, offsets):
        lo, hi = _chord(G, h, x, d)
        if not (hi > lo).all():
            raise EmptyChordError("random chord through the walker is empty")
        x += (lo + u * (hi - lo))[:, None] * d
    # chord endpoints can overshoot the box by an ulp
    np.clip(x, 0.0, 1.0, out=x)
    return x


def hit_and_run(K: Polytope, steps: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """One approximately uniform point of K; the walker moves there."""
    point = walk(K, K.interior[None, :], steps, rng)[0]
    K.interior = point
    return point


def sample_points(K: Polytope, count: int, steps: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """``count`` independent chains started at the walker position."""
    start = np.broadcast_to(K.interior, (count, K.n))
    return walk(K, start, steps, rng)


def hoeffding_halfwidth(N: int, gamma: float = 0.05) -> float:
    return math.sqrt(math.log(2 / gamma) / (2 * N))


def estimate_volume_ratio(
    K: Polytope,
    new: Sequence[Halfspace],
    N: int,
    rng: np.random.Generator,
    steps: int | None = None,
) -> float:
    """Monte Carlo estimate of vol(K cut by ``new``) / vol(K)."""
    if N < 1:
        raise ValueError("need at least one sample")
    if not new:
        return 1.0
    steps = steps if steps is not None else 50 * K.n
    points = sample_points(K, N, steps, rng)
    A_new = np.array([h.coefficients for h in new])
    b_new = np.array([h.bound for h in new])
    inside = np.all(points @ A_new.T >= b_new, axis=1)
    return float(inside.mean())


def default_volume_samples(delta: float) -> int:
    return math.ceil(25 / delta**2)


def batch_size(n: int, delta: float, C: float = 1.0) -> int:
    return math.ceil(C * math.log(n + 1) * math.log(1 / delta) / delta**2)


def iteration_cap(n: int, epsilon: float, delta: float, M: float) -> int:
    margin = witness_margin(epsilon, n, M)
    return math.ceil(n * math.log(1 / margin) / delta) + 1


FeedbackOracle = Callable[[np.ndarray, float, np.ndarray], Feedback]


@dataclass
class IterationRecord:
    iteration: int
    constraints_added: int
    volume_ratio: float
    examples: int
    rejects: int
    unwitnessed: int


@dataclass
class TrainingResult:
    """Final body plus the per-iteration log."""

    polytope: Polytope
    log: list[IterationRecord] = field(default_factory=list)
    hit_cap: bool = False
    last_cut: Polytope | None = None

    @property
    def examples(self) -> int:
        return self.log[-1].examples if self.log else 0

    @property
    def iterations(self) -> int:
        return len(self.log)

    def log_csv(self) -> str:
        rows = ["iteration,constraints_added,volume_ratio,examples"]
        rows += [
            f"{r.iteration},{r.constraints_added},{r.volume_ratio:.6f},{r.examples}"
            for r in self.log
        ]
        return "\n".join(rows) + "\n"


def train(
    oracle: FeedbackOracle,
    dist: ExampleDistribution,
    epsilon: float,
    delta: float,
    rng: np.random.Generator,
    C: float = 1.0,
    steps: int | None = None,
    volume_samples: int | None = None,
    on_iteration: Callable[[Polytope, IterationRecord], None] | None = None,
) -> TrainingResult:
    """Cut the hypothesis body until a batch of feedback barely shrinks it.

    Each iteration proposes bundles from fresh hypotheses for one batch of
    examples, collects every witness pair from rejected proposals as a cut,
    and estimates how much volume the cuts would remove.  Training stops
    (returning the body before the cuts) once more than 1 - delta of the
    volume would survive, or at the iteration cap.
    """
    if not 0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 1/2]")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    n = dist.n
    steps = steps if steps is not None else 50 * n
    volume_samples = volume_samples if volume_samples is not None else default_volume_samples(delta)
    per_batch = batch_size(n, delta, C)
    cap = iteration_cap(n, epsilon, delta, dist.M)

    K = Polytope.unit_box(n)
    result = TrainingResult(K)
    consumed = 0
    for it in range(1, cap + 1):
        cuts: list[Halfspace] = []
        rejects = unwitnessed = 0
        for _ in range(per_batch):
            ex = sample_example(dist, rng)
            guess = hit_and_run(K, steps, rng)
            proposal = solve_linear(guess, ex.prices, ex.budget)
            answer = oracle(ex.prices, ex.budget, proposal)
            consumed += 1
            if answer.accepted:
                continue
            rejects += 1
            new = [Halfspace.from_pair(i, j, ex.prices) for i, j in answer.pairs]
            # some returned pair must rank the goods the other way under the guess
            if not any(h.coefficients @ guess <= 0 for h in new):
                unwitnessed += 1
            cuts.extend(new)

        ratio = estimate_volume_ratio(K, cuts, volume_samples, rng, steps)
        record = IterationRecord(it, len(cuts), ratio, consumed, rejects, unwitnessed)
        result.log.append(record)
        if on_iteration is not None:
            on_iteration(K, record)
        if ratio > 1 - delta:
            result.last_cut = K.copy()
            try:
                result.last_cut.add(cuts)
            except EmptyChordError:
                result.last_cut = None
            return result
        K.add(cuts)
    result.hit_cap = True
    log.warning("polytope training stopped at the iteration cap (%d)", cap)
    return result


def predict(
    K: Polytope, prices: ArrayLike, budget: float, rng: np.random.Generator, steps: int | None = None
) -> Bundle:
    """Solve the knapsack for one hypothesis sampled from K (walker state untouched)."""
    steps = steps if steps is not None else 50 * K.n
    guess = walk(K, K.interior[None, :], steps, rng)[0]
    return solve_linear(guess, as_prices(prices), budget)

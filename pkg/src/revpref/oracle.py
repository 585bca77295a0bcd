"""Ground-truth rational agent.

Exact optimal bundles for linear (fractional knapsack) and separable
quadratic (water-filling) utilities, observation generation, and the
accept/reject feedback protocol used by the polytope learner.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from revpref.types import (
    BUDGET_TOL,
    Bundle,
    Example,
    LinearValuation,
    Observation,
    SeparableConcaveValuation,
    Valuation,
    as_prices,
)


FLAT_RTOL = 1e-12


def _check_inputs(n: int, p: np.ndarray, budget: float) -> None:
    if p.size != n:
        raise ValueError(f"dimension mismatch: {n} values vs {p.size} prices")
    if budget < 0:
        raise ValueError(f"budget must be nonnegative, got {budget}")


def solve_linear(v: LinearValuation | ArrayLike, prices: ArrayLike, budget: float) -> Bundle:
    """Fractional-knapsack optimum for a linear utility.

    Goods are bought whole in decreasing value-per-price order (ties go to
    the lower index) until the budget runs out; at most one good ends up
    fractional.  Zero-value goods sort last, so they only absorb budget
    left over once every valued good is owned.
    """
    values = v.values if isinstance(v, LinearValuation) else np.asarray(v, dtype=np.float64)
    p = as_prices(prices)
    _check_inputs(values.size, p, budget)

    order = np.argsort(-(values / p), kind="stable")
    x = np.zeros_like(p)
    remaining = float(budget)
    for i in order:
        if remaining <= 0:
            break
        if p[i] <= remaining:
            x[i] = 1.0
            remaining -= p[i]
        else:
            x[i] = remaining / p[i]
            remaining = 0.0
    return x


def threshold_bundle(v: SeparableConcaveValuation, p: np.ndarray, tau: float) -> Bundle:
    """Largest fraction of each good whose marginal value per price is >= tau."""
    with np.errstate(divide="ignore", invalid="ignore"):
        curved = np.clip((v.a - tau * p) / v.b, 0.0, 1.0)
    flat = np.where(v.a >= tau * p, 1.0, 0.0)
    return np.where(v.b > 0, curved, flat)


def _spend_equal_shares(x: Bundle, p: np.ndarray, goods: np.ndarray, residual: float) -> float:
    """Split ``residual`` budget evenly (in currency) over ``goods``, capping at 1."""
    active = [i for i in goods if x[i] < 1.0]
    while residual > 0 and active:
        share = residual / len(active)
        still = []
        for i in active:
            room = (1.0 - x[i]) * p[i]
            spend = min(share, room)
            x[i] += spend / p[i]
            residual -= spend
            if spend < room:
                still.append(i)
            else:
                x[i] = 1.0
        if len(still) == len(active):
            break
        active = still
    return max(residual, 0.0)


def solve_separable(v: SeparableConcaveValuation, prices: ArrayLike, budget: float) -> Bundle:
    """Water-filling optimum for a separable quadratic utility.

    Finds the binding threshold tau* = inf{tau >= 0 : cost(x^tau) <= B}.
    The affordable cost is piecewise linear between the breakpoints where
    a good starts or stops being bought, with downward jumps at the rates
    of flat (b_i = 0) goods, so tau* is located exactly by a breakpoint
    scan plus one linear interpolation.  Budget left over at a jump goes
    to the flat goods sitting exactly at tau*.
    """
    p = as_prices(prices)
    _check_inputs(v.n, p, budget)
    B = float(budget)
    a, b = v.a, v.b
    # curvature this small would make the cost jump inside one float step
    flat = b <= FLAT_RTOL * np.maximum(a, 1.0)
    rate = a / p

    def bundle_above(tau: float) -> Bundle:
        # flat goods count only when strictly above tau (right-continuous cost)
        with np.errstate(all="ignore"):
            curved = np.clip((a - tau * p) / b, 0.0, 1.0)
        # exact zero at and past a good's own rate, whatever the round-off
        curved[tau >= rate] = 0.0
        return np.where(flat, (rate > tau).astype(float), curved)

    breaks = np.unique(np.concatenate([[0.0], rate, ((a - b) / p)[~flat]]))
    breaks = breaks[breaks >= 0]
    cost = np.array([p @ bundle_above(t) for t in breaks])

    if cost[0] <= B:
        tau = 0.0
    else:
        # cost is 0 at the largest breakpoint, so k >= 1 exists
        k = int(np.argmax(cost <= B))
        lo, hi = breaks[k - 1], breaks[k]
        left = cost[k - 1]
        right = cost[k] + float(p[flat & (rate == hi)].sum())
        tau = lo + (left - B) / (left - right) * (hi - lo) if right <= B else hi

    x = bundle_above(tau)
    at_threshold = np.flatnonzero(flat & (rate == tau))
    residual = B - float(p @ x)
    if residual < 0 or (residual > 0 and at_threshold.size == 0):
        # interpolation round-off: move only curved goods strictly inside (0, 1)
        inner = np.flatnonzero(~flat & (x > 0) & (x < 1))
        if inner.size:
            x[inner] = np.clip(x[inner] + residual / (inner.size * p[inner]), 0.0, 1.0)
        elif residual < 0:
            x *= B / (B - residual)
        return x
    if at_threshold.size:
        _spend_equal_shares(x, p, at_threshold, residual)
    return x


def optimal_bundle(v: Valuation, prices: ArrayLike, budget: float) -> Bundle:
    if isinstance(v, LinearValuation):
        return solve_linear(v, prices, budget)
    return solve_separable(v, prices, budget)


def make_observation(v: Valuation, example: Example) -> Observation:
    return Observation(example, optimal_bundle(v, example.prices, example.budget))


@dataclass(frozen=True)
class Feedback:
    """Agent's answer to a proposed bundle.

    ``pairs`` lists every ordered pair (i, j) whose value-per-price gap
    exceeds the witness margin; it is empty on acceptance.
    """

    accepted: bool
    pairs: list[tuple[int, int]] = field(default_factory=list)


def witness_margin(epsilon: float, n: int, M: float) -> float:
    return epsilon / (2 * n * M)


def feedback(
    v: LinearValuation,
    prices: ArrayLike,
    budget: float,
    proposed: ArrayLike,
    epsilon: float,
    M: float,
) -> Feedback:
    """Accept an epsilon-optimal proposal, otherwise return witness pairs.

    A rejection carries all pairs with
    (v_i - e') / p_i > (v_j + e') / p_j where e' = epsilon / (2 n M).
    """
    p = as_prices(prices)
    x = np.asarray(proposed, dtype=np.float64)
    if x.shape != p.shape:
        raise ValueError("proposed bundle dimension mismatch")
    if epsilon <= 0 or M < 1:
        raise ValueError("need epsilon > 0 and M >= 1")
    if float(p @ x) > budget + BUDGET_TOL or np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
        raise ValueError("proposed bundle is infeasible")

    best = solve_linear(v, p, budget)
    if v.values @ x >= v.values @ best - epsilon:
        return Feedback(True)

    margin = witness_margin(epsilon, p.size, M)
    hi = (v.values - margin) / p
    lo = (v.values + margin) / p
    mask = hi[:, None] > lo[None, :]
    np.fill_diagonal(mask, False)
    pairs = [(int(i), int(j)) for i, j in zip(*np.nonzero(mask))]
    return Feedback(False, pairs)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import log_grid_min_differences
from revpref.ratio_bounds import InconsistentBoundsError, RatioBoundMatrix, shortest_path_closure

STEP = 2 ** (1 / 16)


def test_tighten_lower_examples():
    m = RatioBoundMatrix(2)
    assert m.tighten_lower(0, 1, 2.0)
    assert m.L[0, 1] == 2.0 and m.U[1, 0] == 0.5
    assert not m.tighten_lower(0, 1, 1.5)
    assert m.tighten_lower(0, 1, 3.0)
    assert m.L[0, 1] == 3.0


def test_tighten_upper_examples():
    m = RatioBoundMatrix(2)
    assert m.tighten_upper(0, 1, 2.0)
    assert m.U[0, 1] == 2.0 and m.L[1, 0] == 0.5
    assert not m.tighten_upper(0, 1, 3.0)
    assert m.tighten_upper(0, 1, 1.5)
    assert m.U[0, 1] == 1.5


@pytest.mark.parametrize("c", [0.0, -1.0])
def test_nonpositive_bounds_rejected(c):
    m = RatioBoundMatrix(2)
    with pytest.raises(ValueError):
        m.tighten_lower(0, 1, c)
    with pytest.raises(ValueError):
        m.tighten_upper(0, 1, c)


def test_fresh_matrix():
    m = RatioBoundMatrix(3)
    assert np.array_equal(np.diag(m.L), np.ones(3)) and np.array_equal(np.diag(m.U), np.ones(3))
    assert np.all(m.L[~np.eye(3, dtype=bool)] == 0) and np.all(np.isinf(m.U[~np.eye(3, dtype=bool)]))
    assert not m.implies_geq(0, 1, 1e-4)
    assert np.array_equal(m.consistent_vector(), np.ones(3))


def test_implies_examples():
    m = RatioBoundMatrix(3)
    m.tighten_lower(0, 1, 2)
    assert m.implies_geq(0, 1, 1.5)
    m.tighten_lower(1, 2, 3)
    assert m.implies_geq(0, 2, 6)
    assert not m.implies_geq(0, 2, 6.01)


def test_consistent_vector_inside_interval():
    m = RatioBoundMatrix(2)
    m.tighten_lower(0, 1, 2)
    m.tighten_upper(0, 1, 4)
    y = m.consistent_vector()
    assert 2 <= y[0] / y[1] <= 4 and y.max() == 1.0


def test_contradiction_detected():
    m = RatioBoundMatrix(2)
    m.tighten_lower(0, 1, 2)
    m.tighten_lower(1, 0, 2)
    with pytest.raises(InconsistentBoundsError):
        m.consistent_vector()


def test_monotonicity_chain():
    m = RatioBoundMatrix(3)
    m.add_monotonicity_chain([(0, 1, 2)])
    assert m.implies_geq(0, 2, 1)
    before = m.L
    m.add_monotonicity_chain([])
    assert np.array_equal(before, m.L)
    m = RatioBoundMatrix(2)
    m.add_monotonicity_chain([(0, 1)])
    m.tighten_lower(1, 0, 2)
    with pytest.raises(InconsistentBoundsError):
        m.consistent_vector()


def test_serialization_round_trip():
    m = RatioBoundMatrix(3)
    m.tighten_lower(0, 1, 2)
    m.tighten_upper(1, 2, 5)
    back = RatioBoundMatrix.from_dict(m.to_dict())
    assert np.array_equal(back.L, m.L)
    assert m.to_dict()["U"][0][2] is None


def random_exponent_bounds(rng, N, count):
    """Random lower bounds in grid units, magnitudes within [1/8, 8]."""
    E = np.full((N, N), -np.inf)
    np.fill_diagonal(E, 0)
    for _ in range(count):
        i, j = rng.choice(N, 2, replace=False)
        E[i, j] = max(E[i, j], rng.integers(-48, 49))
    return E


@pytest.mark.parametrize("seed", range(60))
def test_implies_matches_log_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    N = 4 if seed % 12 == 0 else int(rng.integers(2, 4))
    E = random_exponent_bounds(rng, N, int(rng.integers(1, N + 1)))
    m = RatioBoundMatrix(N)
    for i, j in zip(*np.nonzero(np.isfinite(E) & ~np.eye(N, dtype=bool))):
        m.tighten_lower(i, j, STEP ** E[i, j])
    best = log_grid_min_differences(E, 96)
    if best is None:
        with pytest.raises(InconsistentBoundsError):
            m.closure()
        return
    for i in range(N):
        for j in range(N):
            for q in range(-48, 49, 4):
                assert m.implies_geq(i, j, STEP**q) == (best[i, j] >= q), (i, j, q)


ratio = st.floats(1 / 8, 8)
updates = st.lists(
    st.tuples(st.integers(0, 3), st.integers(0, 3), ratio, st.booleans()).filter(lambda t: t[0] != t[1]),
    max_size=12,
)


def apply(m, ops):
    for i, j, c, lower in ops:
        (m.tighten_lower if lower else m.tighten_upper)(i, j, c)


@given(updates)
def test_reciprocal_coherence(ops):
    m = RatioBoundMatrix(4)
    for i, j, c, lower in ops:
        (m.tighten_lower if lower else m.tighten_upper)(i, j, c)
        # U is stored as the reciprocal view of L
        with np.errstate(divide="ignore"):
            np.testing.assert_allclose(m.L, 1 / m.U.T, rtol=1e-15)


@given(updates)
def test_consistent_vector_meets_bounds(ops):
    m = RatioBoundMatrix(4)
    apply(m, ops)
    try:
        y = m.consistent_vector()
    except InconsistentBoundsError:
        return
    assert np.all(y > 0) and y.max() == 1.0
    assert m.check(y, rtol=1e-9)


@given(updates)
def test_closure_idempotent(ops):
    m = RatioBoundMatrix(4)
    apply(m, ops)
    try:
        dist = m.closure()
    except InconsistentBoundsError:
        return
    assert np.allclose(shortest_path_closure(dist), dist, atol=1e-12)


@given(st.lists(st.floats(0.05, 1), min_size=2, max_size=6), st.integers(0, 2**32 - 1))
@settings(max_examples=50)
def test_bounds_from_true_vector_stay_sound(v, seed):
    # bounds derived from a true vector never exclude it
    v = np.array(v)
    rng = np.random.default_rng(seed)
    m = RatioBoundMatrix(v.size)
    for _ in range(40):
        i, j = rng.choice(v.size, 2, replace=False)
        slack = rng.uniform(0.5, 1)
        if rng.random() < 0.5:
            m.tighten_lower(i, j, slack * v[i] / v[j])
        else:
            m.tighten_upper(i, j, v[i] / v[j] / slack)
    assert m.check(v)
    ratios = v[:, None] / v[None, :]
    implied = np.exp(-m.closure())
    assert np.all(implied <= ratios * (1 + 1e-9))
    assert not math.isnan(implied.sum())

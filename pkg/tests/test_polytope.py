import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import BACKENDS
from disagg.polytope import (
    AgentConstraints,
    AgentSet,
    InfeasibleAgentError,
    aggregate,
    project_agent,
    project_aggregate,
    project_profiles,
)


def brute_tau(y, c):
    """Root of g(tau) by grid search at step 1e-6 on [-5, 5], then bisection."""
    g = lambda tau: np.clip(y + tau, c.lower, c.upper).sum() - c.demand
    grid = np.arange(-5.0, 5.0, 1e-6)
    vals = np.clip(y[None, :] + grid[:, None], c.lower, c.upper).sum(axis=1) - c.demand
    i = int(np.argmax(vals >= 0))
    lo, hi = grid[max(i - 1, 0)], grid[i]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if g(mid) < 0 else (lo, mid)
    return np.clip(y + hi, c.lower, c.upper)


@pytest.mark.parametrize("y,E,l,u,want", [
    ((0, 0), 1, (0, 0), (1, 1), (0.5, 0.5)),
    ((2, 2), 2, (0, 0), (2, 2), (1, 1)),
    ((3, 0), 2, (0, 0), (1, 2), (1, 1)),
])
def test_project_agent_examples(y, E, l, u, want, backend):
    c = AgentConstraints(E, l, u)
    np.testing.assert_allclose(project_agent(np.array(y, float), c, backend), want, atol=1e-12)


def test_third_example_matches_grid_search():
    c = AgentConstraints(2.0, [0.0, 0.0], [1.0, 2.0])
    np.testing.assert_allclose(brute_tau(np.array([3.0, 0.0]), c), [1.0, 1.0], atol=1e-9)


def test_infeasible_agent_is_refused(backend):
    with pytest.raises(InfeasibleAgentError):
        project_agent(np.zeros(2), AgentConstraints(3.0, [0, 0], [1, 1]), backend)
    with pytest.raises(InfeasibleAgentError):
        project_agent(np.zeros(2), AgentConstraints(-1.0, [0, 0], [1, 1]), backend)
    with pytest.raises(ValueError):
        AgentConstraints(1.0, [0, 2], [1, 1])


def test_project_aggregate_examples():
    y, nu = project_aggregate(np.zeros((3, 2)), np.array([0.0, 3.0]))
    np.testing.assert_allclose(nu, [0, 1])
    np.testing.assert_allclose(y, [[0, 1]] * 3)
    y, nu = project_aggregate(np.array([[1.0, 0], [1, 0]]), np.array([0.0, 2.0]))
    np.testing.assert_allclose(nu, [-1, 1])
    np.testing.assert_allclose(y, [[0, 1], [0, 1]])
    x = np.array([[0.2, 0.3], [0.5, 0.0]])
    y, nu = project_aggregate(x, aggregate(x))
    np.testing.assert_array_equal(nu, 0)
    np.testing.assert_array_equal(y, x)


def test_aggregate_examples():
    np.testing.assert_array_equal(aggregate(np.zeros((3, 2))), [0, 0])
    np.testing.assert_array_equal(aggregate(np.ones((3, 2))), [3, 3])
    np.testing.assert_array_equal(aggregate(np.array([[1.0, 2], [3, 4]])), [4, 6])


def test_aggregate_sums_in_agent_order():
    x = np.array([[1e16], [1.0], [-1e16], [1.0]])
    # ((1e16 + 1) - 1e16) + 1 in floating point is 1
    assert aggregate(x)[0] == ((1e16 + 1.0) - 1e16) + 1.0


def boxes(T):
    return st.lists(st.tuples(st.floats(-5, 5), st.floats(0, 3), st.floats(0, 1)),
                    min_size=T, max_size=T)


@settings(max_examples=200, deadline=None)
@given(T=st.integers(2, 8), data=st.data())
def test_projection_properties(T, data):
    rows = data.draw(boxes(T))
    y = np.array([r[0] for r in rows])
    lower = np.array([r[1] for r in rows])
    upper = lower + np.array([r[2] for r in rows])
    frac = data.draw(st.floats(0, 1))
    E = lower.sum() + frac * (upper.sum() - lower.sum())
    c = AgentConstraints(E, lower, upper)
    outs = [project_agent(y, c, b) for b in BACKENDS]
    x = outs[0]
    for other in outs[1:]:
        np.testing.assert_allclose(other, x, atol=1e-12)
    assert abs(x.sum() - E) <= 1e-12 * max(1.0, abs(E)) * T
    assert np.all(x >= lower) and np.all(x <= upper)
    np.testing.assert_allclose(project_agent(x, c), x, atol=1e-9)
    # KKT: free coordinates share one shift
    free = (x > lower + 1e-9) & (x < upper - 1e-9)
    if free.sum() > 1:
        shift = x[free] - y[free]
        assert np.ptp(shift) < 1e-9


def test_projection_beats_random_feasible_points():
    rng = np.random.default_rng(3)
    for _ in range(20):
        T = int(rng.integers(2, 7))
        lower = rng.uniform(0, 1, T)
        upper = lower + rng.uniform(0, 2, T)
        E = rng.uniform(lower.sum(), upper.sum())
        c = AgentConstraints(E, lower, upper)
        y = rng.normal(0, 3, T)
        d = np.linalg.norm(project_agent(y, c) - y)
        # random points of X_n: project random box points
        for _ in range(1000):
            z = project_agent(rng.uniform(lower, upper) + rng.normal(0, 1, T), c)
            assert d <= np.linalg.norm(z - y) + 1e-12


def test_nonexpansive_both_projections():
    rng = np.random.default_rng(4)
    for _ in range(200):
        N, T = int(rng.integers(1, 5)), int(rng.integers(2, 7))
        lower = rng.uniform(0, 1, (N, T))
        upper = lower + rng.uniform(0, 2, (N, T))
        agents = AgentSet(rng.uniform(lower.sum(1), upper.sum(1)), lower, upper)
        y1, y2 = rng.normal(0, 2, (2, N, T))
        assert (np.linalg.norm(project_profiles(y1, agents) - project_profiles(y2, agents))
                <= np.linalg.norm(y1 - y2) + 1e-12)
        p = rng.normal(0, 2, T)
        a, _ = project_aggregate(y1, p)
        b, _ = project_aggregate(y2, p)
        assert np.linalg.norm(a - b) <= np.linalg.norm(y1 - y2) + 1e-12
        assert np.max(np.abs(aggregate(a) - p)) <= 1e-12 * max(1.0, np.abs(p).max()) * N


def test_agent_set_helpers():
    agents = AgentSet.from_agents([AgentConstraints(1.0, [0, 0], [1, 1]),
                                   AgentConstraints(0.5, [0, 0.1], [0.2, 1])])
    assert (agents.n_agents, agents.horizon, len(agents)) == (2, 2, 2)
    x0 = agents.uniform_start()
    np.testing.assert_allclose(x0, [[0.5, 0.5], [0.2, 0.25]])
    assert agents.contains(np.array([[0.5, 0.5], [0.2, 0.3]]))
    assert not agents.contains(x0)
    with pytest.raises(InfeasibleAgentError):
        AgentSet([5.0], np.zeros((1, 2)), np.ones((1, 2))).check_nonempty()


def test_demand_at_upper_sum_with_rounding(backend):
    # E = sum(u) up to one ulp; a degenerate box l = u = 0 sits in front
    lower = np.array([0.0, 0.7195206006260679])
    upper = lower + np.array([0.0, 0.7047269317163759])
    E = lower.sum() + 1.0 * (upper.sum() - lower.sum())
    x = project_agent(np.array([0.0, -3.0]), AgentConstraints(E, lower, upper), backend)
    np.testing.assert_allclose(x, [0.0, upper[1]], atol=1e-15)

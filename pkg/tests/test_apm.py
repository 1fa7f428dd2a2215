import numpy as np
import pytest

from conftest import random_agents
from disagg.apm import (
    ApmConfig,
    MaxItersExceeded,
    iteration_bound,
    profile_norm,
    rate_bound,
    run_apm,
)
from disagg.polytope import AgentSet, aggregate, project_profiles


def feasible_instance(rng, N, T):
    agents = random_agents(rng, N, T)
    z = project_profiles(agents.uniform_start() + rng.normal(0, 0.5, (N, T)), agents)
    return aggregate(z), agents, z


def test_fixed_point_start_stops_after_one_iteration(backend):
    rng = np.random.default_rng(0)
    p, agents, z = feasible_instance(rng, 3, 4)
    res = run_apm(p, agents, y0=z, backend=backend)
    assert res.iterations == 1
    assert res.gap <= 1e-12


def test_fig1_orbit(fig1, backend):
    p, agents = fig1
    res = run_apm(p, agents, cfg=ApmConfig(eps_cvg=1e-10), backend=backend)
    assert res.gap > 0.1
    np.testing.assert_allclose(res.x_final[:, 1].sum(), 2.0, atol=1e-9)
    np.testing.assert_allclose(res.nu_final[1], 1 / 3, atol=1e-9)
    np.testing.assert_allclose(res.nu_final[0], (0 - res.x_final[:, 0].sum()) / 3, atol=1e-12)
    assert agents.contains(res.x_final)
    np.testing.assert_allclose(aggregate(res.y_final), p, atol=1e-12)


def test_single_agent_converges_to_unique_point(backend):
    agents = AgentSet([1.0], np.zeros((1, 2)), np.ones((1, 2)))
    p = np.array([0.4, 0.6])
    res = run_apm(p, agents, y0=np.array([[5.0, -2.0]]), cfg=ApmConfig(eps_cvg=1e-12),
                  backend=backend)
    np.testing.assert_allclose(res.x_final, [[0.4, 0.6]], atol=1e-10)
    np.testing.assert_allclose(res.y_final, [[0.4, 0.6]], atol=1e-10)
    assert res.gap <= 1e-10


def test_rate_bound_values():
    assert rate_bound(1, 2) == pytest.approx(5 / 9, abs=1e-15)
    assert rate_bound(20, 24) == pytest.approx(1 - 4 / 287500, abs=1e-15)
    assert rate_bound(2, 5) > rate_bound(1, 5)
    assert rate_bound(2, 6) > rate_bound(2, 5)
    with pytest.raises(ValueError):
        rate_bound(3, 1)


def test_iteration_bound_values():
    assert iteration_bound(0.0, 1e-3, 0.9) == 0
    assert iteration_bound(1.0, 2.0, 0.5) == 0
    assert iteration_bound(1.0, 1e-3, 0.9) == 73
    for d, eps, rho in [(3.0, 1e-6, 0.99), (0.5, 1e-2, 0.3)]:
        k = iteration_bound(d, eps, rho)
        assert 2 * d * rho**k <= eps < 2 * d * rho ** (k - 1)


def test_config_validation():
    with pytest.raises(ValueError):
        ApmConfig(eps_cvg=0)
    with pytest.raises(ValueError):
        ApmConfig(max_iters=0)
    with pytest.raises(ValueError):
        ApmConfig(norm="l7")
    with pytest.raises(ValueError):
        profile_norm(np.ones(2), "l7")


def test_max_iters_carries_state(fig1):
    p, agents = fig1
    with pytest.raises(MaxItersExceeded) as exc:
        run_apm(p, agents, cfg=ApmConfig(eps_cvg=1e-14, max_iters=2))
    assert exc.value.result.iterations == 2
    assert agents.contains(exc.value.result.x_final)


def test_opmax_norm():
    a = np.array([[1.0, -2.0], [0.5, 0.5]])
    assert profile_norm(a, "opmax") == 3.0
    assert profile_norm(a) == pytest.approx(np.sqrt(5.5))


def test_fejer_and_gap_monotonicity():
    rng = np.random.default_rng(11)
    for _ in range(30):
        N, T = int(rng.integers(2, 6)), int(rng.integers(2, 7))
        p, agents, z = feasible_instance(rng, N, T)
        res = run_apm(p, agents, cfg=ApmConfig(eps_cvg=1e-9), trace=True)
        dist = [np.linalg.norm(y - z) for _, y in res.trace]
        gaps = [np.linalg.norm(x - y) for x, y in res.trace]
        assert all(b <= a + 1e-12 for a, b in zip(dist, dist[1:]))
        assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))


def test_gap_monotone_on_infeasible_instances(fig1):
    p, agents = fig1
    res = run_apm(p, agents, cfg=ApmConfig(eps_cvg=1e-10), trace=True)
    gaps = [np.linalg.norm(x - y) for x, y in res.trace]
    assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))


def test_x_stop_rule_uses_x_displacement(fig1):
    p, agents = fig1
    res = run_apm(p, agents, cfg=ApmConfig(eps_cvg=1e-8, stop_on="x"), trace=True)
    (x1, _), (x2, _) = res.trace[-2:]
    assert np.linalg.norm(x2 - x1) < 1e-8


def test_backends_give_identical_iterates():
    rng = np.random.default_rng(5)
    from conftest import BACKENDS
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernels not built")
    for _ in range(10):
        N, T = int(rng.integers(2, 6)), int(rng.integers(2, 8))
        agents = random_agents(rng, N, T)
        p = rng.dirichlet(np.ones(T)) * agents.demand.sum()
        a = run_apm(p, agents, cfg=ApmConfig(eps_cvg=1e-9), trace=True, backend="python")
        b = run_apm(p, agents, cfg=ApmConfig(eps_cvg=1e-9), trace=True, backend="cython")
        assert a.iterations == b.iterations
        for (xa, ya), (xb, yb) in zip(a.trace, b.trace):
            np.testing.assert_allclose(xa, xb, atol=1e-12)
            np.testing.assert_allclose(ya, yb, atol=1e-12)

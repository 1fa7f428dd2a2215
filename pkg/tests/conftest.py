import itertools

import numpy as np
import pytest

from disagg.polytope import (
    AgentConstraints,
    AgentSet,
    aggregate,
    project_agent,
    project_profiles,
)

BACKENDS = ["python"]
try:
    from disagg import _kernels  # noqa: F401
    BACKENDS.append("cython")
except ImportError:
    pass


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def fig1():
    """Three agents, two periods, demands (2, .5, .5), boxes [0, 1]; p = (0, 3) is infeasible."""
    agents = AgentSet([2.0, 0.5, 0.5], np.zeros((3, 2)), np.ones((3, 2)))
    return np.array([0.0, 3.0]), agents


def random_agents(rng, N, T):
    lower = rng.uniform(0.0, 2.0, size=(N, T))
    upper = lower + rng.uniform(0.1, 2.0, size=(N, T))
    demand = rng.uniform(lower.sum(axis=1), upper.sum(axis=1))
    return AgentSet(demand, lower, upper)


def random_balanced_p(rng, agents, spread=3.0):
    """Allocation meeting the aggregate data (sum and per-period bounds), often not disaggregable."""
    box = AgentConstraints(agents.demand.sum(), agents.lower.sum(axis=0),
                           agents.upper.sum(axis=0))
    return project_agent(rng.normal(0.0, spread, agents.horizon), box)


def hoffman_slacks(p, agents):
    """Slack of every Hoffman inequality with the best agent split, by period subset.

    Independent of the library oracle: a plain loop over subsets.
    """
    T = agents.horizon
    out = {}
    for mask in itertools.product([False, True], repeat=T):
        inside = np.array(mask)
        rhs = np.minimum(agents.upper[:, ~inside].sum(axis=1),
                         agents.demand - agents.lower[:, inside].sum(axis=1)).sum()
        out[frozenset(np.flatnonzero(inside).tolist())] = rhs - p[~inside].sum()
    return out


def nontrivial_min_slack(p, agents):
    T = agents.horizon
    return min(v for k, v in hoffman_slacks(p, agents).items() if 0 < len(k) < T)


def random_instance(rng, N, T, want=None, margin=1e-3, tries=1000):
    """Random (p, agents) whose nontrivial Hoffman slacks stay ``margin`` away from zero.

    The inequalities for an empty or full period subset always hold with equality
    on balanced data, so only the others decide. ``want`` asks for a feasible
    (True), infeasible (False) or either (None) instance.
    """
    for _ in range(tries):
        agents = random_agents(rng, N, T)
        if want is True:
            x = project_profiles(rng.uniform(agents.lower, agents.upper), agents)
            p = aggregate(x)
        else:
            p = random_balanced_p(rng, agents, spread=rng.choice([0.5, 2.0, 8.0]))
        slack = nontrivial_min_slack(p, agents)
        if abs(slack) < margin:
            continue
        feasible = slack > 0
        if want is None or feasible == want:
            return p, agents, feasible
    raise RuntimeError("could not draw an instance with the requested margin")


ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; printed at the end of the run."""
    def record(number, ok, detail=""):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        ACCEPTANCE[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])

"""Agent constraint sets and the two Euclidean projections used by APM.

An agent's admissible profiles form the set

    X_n = {x in R^T : sum(x) = E_n, lower <= x <= upper}

and, for an allocation ``p``, the aggregate set is the affine space

    Y_p = {y in R^{N x T} : sum over agents of y = p}.

Profile matrices, allocations and corrections are plain float64 numpy arrays
of shape ``(N, T)``, ``(T,)`` and ``(T,)``.
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels


class InfeasibleAgentError(ValueError):
    """An agent's constraint set is empty (sum(lower) > E or sum(upper) < E)."""

    def __init__(self, agent, demand=None, lower_sum=None, upper_sum=None):
        self.agent = agent
        msg = f"agent {agent} has an empty constraint set"
        if demand is not None:
            msg += f" (E={demand!r}, sum(lower)={lower_sum!r}, sum(upper)={upper_sum!r})"
        super().__init__(msg)


@dataclass(frozen=True)
class AgentConstraints:
    """Private data of one agent: total demand and per-period bounds."""

    demand: float
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.ascontiguousarray(self.lower, dtype=float)
        upper = np.ascontiguousarray(self.upper, dtype=float)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-d arrays of equal length")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "demand", float(self.demand))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def horizon(self):
        return self.lower.shape[0]

    def is_nonempty(self, tol=1e-12):
        slack = tol * max(1.0, abs(self.demand))
        return self.lower.sum() <= self.demand + slack and self.upper.sum() >= self.demand - slack

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= self.lower - tol)
            and np.all(x <= self.upper + tol)
            and abs(x.sum() - self.demand) <= tol * max(1.0, abs(self.demand))
        )


class AgentSet:
    """Stacked constraints of N agents (``demand``: (N,), ``lower``/``upper``: (N, T))."""

    def __init__(self, demand, lower, upper):
        self.demand = np.ascontiguousarray(demand, dtype=float)
        self.lower = np.ascontiguousarray(lower, dtype=float)
        self.upper = np.ascontiguousarray(upper, dtype=float)
        if self.lower.ndim != 2 or self.lower.shape != self.upper.shape:
            raise ValueError("lower/upper must be (N, T) arrays of equal shape")
        if self.demand.shape != (self.lower.shape[0],):
            raise ValueError("demand must have one entry per agent")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @classmethod
    def from_agents(cls, agents: Sequence[AgentConstraints]):
        if isinstance(agents, AgentSet):
            return agents
        agents = list(agents)
        return cls(
            [a.demand for a in agents],
            np.stack([a.lower for a in agents]),
            np.stack([a.upper for a in agents]),
        )

    def __len__(self):
        return self.lower.shape[0]

    def __getitem__(self, n):
        return AgentConstraints(self.demand[n], self.lower[n], self.upper[n])

    def __iter__(self):
        return (self[n] for n in range(len(self)))

    @property
    def n_agents(self):
        return self.lower.shape[0]

    @property
    def horizon(self):
        return self.lower.shape[1]

    def check_nonempty(self):
        for n in range(len(self)):
            if not self[n].is_nonempty():
                a = self[n]
                raise InfeasibleAgentError(n, a.demand, a.lower.sum(), a.upper.sum())

    def contains(self, x, tol=1e-9):
        """Whether every row of ``x`` lies in its agent's set (to ``tol``)."""
        x = np.asarray(x, dtype=float)
        return all(self[n].contains(x[n], tol) for n in range(len(self)))

    def uniform_start(self):
        """Clamp of the even split E_n / T into each agent's box."""
        T = self.horizon
        return np.ascontiguousarray(
            np.clip(self.demand[:, None] / T, self.lower, self.upper)
        )


def as_agent_set(agents):
    return agents if isinstance(agents, AgentSet) else AgentSet.from_agents(agents)


def _raise_infeasible(agents, n):
    raise InfeasibleAgentError(
        n, agents.demand[n], agents.lower[n].sum(), agents.upper[n].sum()
    )


def project_agent(y, c: AgentConstraints, backend=None):
    """Euclidean projection of ``y`` on {x : sum(x) = E, lower <= x <= upper}.

    Solves the continuous quadratic knapsack by locating the root of
    g(tau) = sum(clip(y + tau, lower, upper)) - E among the 2T sorted
    breakpoints {lower - y, upper - y}; cost O(T log T). Bounds hold exactly
    and the sum matches E up to roundoff.
    """
    y = np.ascontiguousarray(y, dtype=float).reshape(1, -1)
    if y.shape[1] != c.horizon:
        raise ValueError("dimension mismatch")
    out = np.empty_like(y)
    bad = kernels.get_backend(backend).project_rows(
        y, np.array([c.demand]), c.lower.reshape(1, -1), c.upper.reshape(1, -1), out
    )
    if bad >= 0:
        raise InfeasibleAgentError(0, c.demand, c.lower.sum(), c.upper.sum())
    return out[0]


def project_profiles(Y, agents, backend=None):
    """Projection on X = prod_n X_n, one agent per row."""
    agents = as_agent_set(agents)
    Y = np.ascontiguousarray(Y, dtype=float)
    out = np.empty_like(Y)
    bad = kernels.get_backend(backend).project_rows(
        Y, agents.demand, agents.lower, agents.upper, out
    )
    if bad >= 0:
        _raise_infeasible(agents, bad)
    return out


def aggregate(x):
    """Column sums over agents, accumulated in ascending agent order."""
    x = np.asarray(x, dtype=float)
    S = x[0].copy()
    for n in range(1, x.shape[0]):
        S += x[n]
    return S


def project_aggregate(x, p):
    """Projection on Y_p: shift every row by nu = (p - sum_n x_n) / N.

    Returns ``(y, nu)``.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if x.shape[1:] != p.shape:
        raise ValueError("dimension mismatch between profiles and allocation")
    nu = (p - aggregate(x)) / x.shape[0]
    return x + nu[None, :], nu

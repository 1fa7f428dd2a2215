"""Feasibility oracles for disaggregation and Hoffman-cut extraction.

Period and agent indices are 0-based throughout.

Disaggregating ``p`` is a bipartite transportation problem: period t supplies
exactly p_t, agent n absorbs exactly E_n, and arc (t, n) carries a flow in
[lower[n, t], upper[n, t]]. It is feasible iff, for every subset T_in of
periods and N_in of agents,

    sum_{t not in T_in} p_t <= sum_{t not in T_in, n in N_in} upper[n, t]
                               - sum_{t in T_in, n not in N_in} lower[n, t]
                               + sum_{n not in N_in} E_n.
"""
import math
from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple

import networkx as nx
import numpy as np

from .polytope import aggregate, as_agent_set

MAX_BRUTEFORCE_T = 22


class CallerMustTightenEps(RuntimeError):
    """The orbit is too coarse to identify a violated cut; rerun APM with a smaller eps."""


@dataclass(frozen=True)
class HoffmanCut:
    """Valid inequality sum_{t in t0} p_t <= a_t0.

    ``n0`` is kept for auditing; the operator never needs it.
    """

    t0: FrozenSet[int]
    a_t0: float
    n0: FrozenSet[int] = frozenset()

    def lhs(self, p):
        p = np.asarray(p, dtype=float)
        return float(sum(p[t] for t in sorted(self.t0)))

    def violation(self, p):
        """sum_{t0} p_t - a_t0; positive means ``p`` violates the cut."""
        return self.lhs(p) - self.a_t0

    def to_dict(self):
        return {"t0": sorted(int(t) for t in self.t0), "a_t0": float(self.a_t0),
                "n0": sorted(int(n) for n in self.n0)}

    @classmethod
    def from_dict(cls, d):
        return cls(frozenset(d["t0"]), float(d["a_t0"]), frozenset(d.get("n0", ())))


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    # (T_in, N_in, slack) of the least-slack Hoffman inequality
    witness_cut: Optional[Tuple[FrozenSet[int], FrozenSet[int], float]] = None

    @property
    def min_slack(self):
        return None if self.witness_cut is None else self.witness_cut[2]


def _check_balance(p, agents, tol=1e-9):
    gap = abs(float(np.sum(p)) - float(np.sum(agents.demand)))
    if gap > tol * max(1.0, abs(float(np.sum(agents.demand)))):
        raise ValueError(f"aggregate demand balance violated by {gap:.3e}")


def hoffman_feasible_bruteforce(p, agents, tol=1e-9, chunk=1 << 14):
    """Enumerate all 2^T period subsets and report the least-slack Hoffman inequality.

    For a fixed T_in the best N_in is chosen agent by agent: n joins N_in iff
    sum_{t not in T_in} upper[n, t] < E_n - sum_{t in T_in} lower[n, t].
    """
    agents = as_agent_set(agents)
    p = np.asarray(p, dtype=float)
    T = agents.horizon
    if T > MAX_BRUTEFORCE_T:
        raise ValueError(f"T={T} too large for enumeration; use maxflow_feasible")
    _check_balance(p, agents)

    bits = 1 << np.arange(T)
    best_slack, best_mask, best_nin = np.inf, 0, None
    for start in range(0, 1 << T, chunk):
        masks = np.arange(start, min(start + chunk, 1 << T))
        inside = ((masks[:, None] & bits[None, :]) != 0).astype(float)  # t in T_in
        outside = 1.0 - inside
        lhs = outside @ p
        via_upper = outside @ agents.upper.T  # (M, N)
        via_demand = agents.demand[None, :] - inside @ agents.lower.T
        rhs = np.minimum(via_upper, via_demand).sum(axis=1)
        slack = rhs - lhs
        i = int(np.argmin(slack))
        if slack[i] < best_slack:
            best_slack = float(slack[i])
            best_mask = int(masks[i])
            best_nin = via_upper[i] < via_demand[i]
    t_in = frozenset(t for t in range(T) if best_mask >> t & 1)
    n_in = frozenset(int(n) for n in np.flatnonzero(best_nin))
    return FeasibilityReport(best_slack >= -tol, (t_in, n_in, best_slack))


def _to_grid(values, scale):
    return [int(round(v * scale)) for v in np.ravel(values)]


def _balance_on_grid(p, target, scale):
    """Round ``p`` onto the grid keeping its integer sum equal to ``target``."""
    scaled = np.asarray(p, dtype=float) * scale
    base = np.floor(scaled).astype(np.int64)
    # the rounded demands may differ from sum(p) by a few grid units
    whole, extra = divmod(target - int(base.sum()), len(base))
    # largest fractional parts absorb the remainder, lowest index on ties
    order = sorted(range(len(base)), key=lambda t: (-(scaled[t] - base[t]), t))
    out = [int(v) + whole for v in base]
    for t in order[:extra]:
        out[t] += 1
    return out


def maxflow_feasible(p, agents, scale=1e6):
    """Exact feasibility test by circulation with lower bounds.

    Inputs are put on a grid of ``1/scale``: demands to the nearest point,
    ``p`` so that its sum matches the rounded demands exactly, and the arc
    bounds outward (floor of lower minus one step, ceiling of upper plus one
    step) so that rounding cannot break a feasible instance. The answer is
    exact for that grid instance; true instances whose Hoffman slack lies
    within about N * T / scale of zero may be reported feasible.

    Network: source -> period t fixed at p_t; period t -> agent n within
    [lower, upper]; agent n -> sink fixed at E_n; sink -> source unbounded.
    Each lower bound l on arc (u, v) is removed by shrinking the capacity to
    c - l and recording +l excess at v and -l at u. A super-source feeds every
    positive excess and every deficit drains into a super-sink; the
    circulation exists iff the max flow saturates all super-source arcs.
    """
    agents = as_agent_set(agents)
    p = np.asarray(p, dtype=float)
    _check_balance(p, agents)
    N, T = agents.n_agents, agents.horizon
    E = _to_grid(agents.demand, scale)
    L = np.array([int(math.floor(v * scale)) - 1 for v in agents.lower.ravel()],
                 dtype=object).reshape(N, T)
    U = np.array([int(math.ceil(v * scale)) + 1 for v in agents.upper.ravel()],
                 dtype=object).reshape(N, T)
    P = _balance_on_grid(p, sum(E), scale)

    G = nx.DiGraph()
    excess = {}

    def arc(u, v, lo, hi):
        if hi is not None:
            G.add_edge(u, v, capacity=hi - lo)
        else:
            G.add_edge(u, v)  # no capacity attribute: unbounded
        excess[v] = excess.get(v, 0) + lo
        excess[u] = excess.get(u, 0) - lo

    for t in range(T):
        arc("src", ("t", t), P[t], P[t])
    for n in range(N):
        for t in range(T):
            if L[n, t] > U[n, t]:
                return False
            arc(("t", t), ("n", n), L[n, t], U[n, t])
        arc(("n", n), "snk", E[n], E[n])
    arc("snk", "src", 0, None)

    need = 0
    for v, b in excess.items():
        if b > 0:
            G.add_edge("S*", v, capacity=b)
            need += b
        elif b < 0:
            G.add_edge(v, "T*", capacity=-b)
    if need == 0:
        return True
    return nx.maximum_flow_value(G, "S*", "T*") == need


def max_period_mass(t0, agents):
    """max over x in X of sum_{t in t0} sum_n x[n, t], with its minimizing agent set N0.

    Per agent the maximum is min(sum_{t0} upper, E_n - sum_{not t0} lower);
    agents attaining the second term form N0. The result is the right-hand
    side of the Hoffman inequality indexed by (T_in, N_in) = (not t0, not N0).
    """
    agents = as_agent_set(agents)
    mask = np.zeros(agents.horizon, dtype=bool)
    mask[list(t0)] = True
    via_upper = agents.upper[:, mask].sum(axis=1)
    via_demand = agents.demand - agents.lower[:, ~mask].sum(axis=1)
    n0 = frozenset(int(n) for n in np.flatnonzero(via_demand < via_upper))
    return float(np.minimum(via_upper, via_demand).sum()), n0


def extract_cut(x_inf, nu_inf, p, agents, *, tol=1e-9, n0_tol=1e-9):
    """Hoffman cut from a limit orbit (x_inf in X, y_inf = x_inf + nu_inf in Y_p).

    t0 = {t : p_t - sum_n x_inf[n, t] > tol}, a_t0 = sum_{t0} sum_n x_inf, and
    n0 = {n : E_n - sum_{t not in t0} lower - sum_{t in t0} upper < -n0_tol}.
    Raises :class:`CallerMustTightenEps` when the orbit gives no strictly
    violated cut.
    """
    agents = as_agent_set(agents)
    x_inf = np.asarray(x_inf, dtype=float)
    p = np.asarray(p, dtype=float)
    S = aggregate(x_inf)
    excess = p - S if nu_inf is None else agents.n_agents * np.asarray(nu_inf, dtype=float)
    t0 = frozenset(int(t) for t in np.flatnonzero(excess > tol))
    if not t0 or len(t0) == agents.horizon:
        raise CallerMustTightenEps(f"degenerate period set {sorted(t0)}")

    mask = np.zeros(agents.horizon, dtype=bool)
    mask[sorted(t0)] = True
    a_t0 = float(S[mask].sum())
    if not p[mask].sum() > a_t0:
        raise CallerMustTightenEps("orbit does not certify a violated cut")
    inner = (
        agents.demand
        - agents.lower[:, ~mask].sum(axis=1)
        - agents.upper[:, mask].sum(axis=1)
    )
    n0 = frozenset(int(n) for n in np.flatnonzero(inner < -n0_tol))
    return HoffmanCut(t0, a_t0, n0)

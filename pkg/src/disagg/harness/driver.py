"""Cutting-plane loop: master solve, non-intrusive disaggregation, cut, repeat."""
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..cuts import HoffmanCut
from ..master import Aggregates, build_linear_master, build_microgrid_milp, solve_milp
from ..niapm import NiapmConfig, run_niapm
from ..polytope import as_agent_set
from ..smc import MessageLedger, smca


class MasterInfeasible(RuntimeError):
    """The master has no solution; the aggregate data are inconsistent."""


class CutLimitReached(RuntimeError):
    def __init__(self, msg, metrics):
        self.metrics = metrics
        super().__init__(msg)


class MasterProblem:
    """Operator side: returns an optimal p for the base constraints plus the cuts so far."""

    horizon: int

    def solve(self, cuts):
        raise NotImplementedError


class MicrogridMaster(MasterProblem):
    def __init__(self, params, aggregates, backend="highs"):
        self.params = params
        self.aggregates = aggregates
        self.backend = backend
        self.horizon = params.horizon

    def build(self, cuts=()):
        return build_microgrid_milp(self.params, self.aggregates, list(cuts))

    def solve(self, cuts):
        return solve_milp(self.build(cuts), backend=self.backend)


class LinearMaster(MasterProblem):
    """min c.p over the aggregate box and total-demand row; no generation model."""

    def __init__(self, cost, aggregates, backend="builtin"):
        self.cost = np.asarray(cost, dtype=float)
        self.aggregates = aggregates
        self.backend = backend
        self.horizon = self.cost.size

    def solve(self, cuts):
        model, p_idx = build_linear_master(self.cost, self.aggregates, list(cuts))
        sol = solve_milp(model, backend=self.backend)
        if sol.optimal:
            sol.p = sol.x[p_idx].copy()
        return sol


def secure_aggregates(agents, smc_seed, ledger=None):
    """Sum of demands and of both bound profiles, learned through secret sharing."""
    agents = as_agent_set(agents)
    scale = 2.0 * max(1.0, float(np.abs(agents.upper).max()))
    demand = agents.demand.reshape(-1, 1)
    total = smca(demand, 2.0 * max(1.0, float(demand.max())), [smc_seed, 0, 0], ledger,
                 round=-1, tag="demand")[0]
    lower = smca(agents.lower, scale, [smc_seed, 0, 1], ledger, round=-1, tag="lower")
    upper = smca(agents.upper, scale, [smc_seed, 0, 2], ledger, round=-1, tag="upper")
    return Aggregates(float(total), lower, upper)


def call_seed(smc_seed, s):
    """Seed of the s-th NI-APM call, split off the instance's SMC stream."""
    return int(np.random.SeedSequence([smc_seed, s + 1]).generate_state(1, np.uint64)[0] >> 1)


@dataclass
class CutStep:
    """One master solve and what the disaggregation step made of it."""

    objective: float
    kind: str
    iterations: int
    eps_halvings: int
    t0: Optional[List[int]] = None
    a_t0: Optional[float] = None
    violation: Optional[float] = None

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class RunMetrics:
    n_master_problems: int = 0
    n_projections: int = 0
    wall_time: float = 0.0
    objective: Optional[float] = None
    cuts: List[HoffmanCut] = field(default_factory=list)
    steps: List[CutStep] = field(default_factory=list)

    @property
    def n_cuts(self):
        return len(self.cuts)

    def distinct_cuts(self):
        return len({c.t0 for c in self.cuts}) == len(self.cuts)


@dataclass
class RunOutcome:
    solution: object
    profiles: np.ndarray
    metrics: RunMetrics
    aggregates: Aggregates
    ledger: Optional[MessageLedger] = None
    gap: float = 0.0


def run_cutting_planes(master, agents, cfg=None, *, smc_seed=0, ledger=None,
                       aggregates=None, max_masters=5000, backend=None, warm_start=True):
    """Alternate master solves and NI-APM calls until the allocation disaggregates.

    With ``warm_start`` each agent starts a call from the y it held at the end of
    the previous one instead of the uniform profile. Nothing new is revealed:
    the rows never leave their owners.
    """
    cfg = cfg or NiapmConfig()
    agents = as_agent_set(agents)
    metrics = RunMetrics()
    start = time.perf_counter()
    seen = set()
    y0 = None
    for s in range(max_masters):
        sol = master.solve(metrics.cuts)
        metrics.n_master_problems += 1
        if not sol.optimal:
            raise MasterInfeasible(f"master problem {s} is {sol.status}")
        call_cfg = NiapmConfig(**{**cfg.__dict__, "rng_seed": call_seed(smc_seed, s)})
        res = run_niapm(sol.p, agents, call_cfg, ledger, y0=y0, backend=backend)
        if warm_start:
            y0 = res.x + res.nu[None, :]
        metrics.n_projections += res.stats.apm_iterations
        step = CutStep(sol.objective, res.kind, res.stats.apm_iterations,
                       res.stats.eps_halvings)
        metrics.steps.append(step)
        if res.is_disag:
            metrics.objective = sol.objective
            metrics.wall_time = time.perf_counter() - start
            return RunOutcome(sol, res.x, metrics, aggregates, ledger, res.gap)
        cut = HoffmanCut(res.t0, res.a_t0)
        step.t0 = sorted(cut.t0)
        step.a_t0 = cut.a_t0
        step.violation = cut.violation(sol.p)
        if cut.t0 in seen:
            # a repeated T0 with a lower bound would be redundant; keep the tighter one
            metrics.wall_time = time.perf_counter() - start
            raise CutLimitReached(f"repeated cut support {sorted(cut.t0)}", metrics)
        seen.add(cut.t0)
        metrics.cuts.append(cut)
    metrics.wall_time = time.perf_counter() - start
    raise CutLimitReached(f"no disaggregation after {max_masters} master problems", metrics)


def run_algorithm4(spec, cfg=None, *, master_backend="highs", keep_ledger=True,
                   max_masters=5000, backend=None, warm_start=True):
    """Full operator/agent run on a generated instance.

    Returns ``(MilpSolution, x*, RunMetrics)``. The aggregate bounds the master
    needs are themselves obtained through secret sharing.
    """
    out = solve_instance(spec, cfg, master_backend=master_backend, keep_ledger=keep_ledger,
                         max_masters=max_masters, backend=backend, warm_start=warm_start)
    return out.solution, out.profiles, out.metrics


def solve_instance(spec, cfg=None, *, master_backend="highs", keep_ledger=True,
                   max_masters=5000, backend=None, warm_start=True):
    cfg = cfg or NiapmConfig()
    ledger = MessageLedger(keep_payloads=False) if keep_ledger else None
    t0 = time.perf_counter()
    agg = secure_aggregates(spec.agents, spec.smc_seed, ledger)
    if cfg.share_bound is None:
        # the operator only knows totals; size the masks from the mean demand
        cfg = NiapmConfig(**{**cfg.__dict__,
                             "share_bound": 2.0 * max(1.0, agg.sum_demand / spec.n_agents)})
    master = MicrogridMaster(spec.params, agg, backend=master_backend)
    out = run_cutting_planes(master, spec.agents, cfg, smc_seed=spec.smc_seed, ledger=ledger,
                             aggregates=agg, max_masters=max_masters, backend=backend,
                             warm_start=warm_start)
    out.metrics.wall_time = time.perf_counter() - t0
    return out

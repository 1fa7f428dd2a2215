"""Exact MILP solve: best-bound branch and bound over the binary columns."""
import heapq
import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import LinearModel, MilpInstance
from .simplex import solve_lp

INT_TOL = 1e-6
PRUNE_TOL = 1e-9


@dataclass
class MilpSolution:
    status: str  # 'optimal' | 'infeasible'
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    nodes: int = 0
    p: Optional[np.ndarray] = None
    schedule: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status == "optimal"


def _lp(model, lb, ub):
    return solve_lp(model.c, model.A, model.senses, model.rhs, lb, ub)


def _branch_index(x, binary):
    idx = np.flatnonzero(binary)
    if idx.size == 0:
        return -1
    frac = np.abs(x[idx] - np.round(x[idx]))
    best = float(frac.max())
    if best <= INT_TOL:
        return -1
    # most fractional, lowest index on ties (argmax returns the first)
    return int(idx[np.argmax(frac >= best - 1e-12)])


def branch_and_bound(model: LinearModel, node_limit=1_000_000):
    """Best-bound search; node LPs solved from scratch by the built-in simplex."""
    counter = itertools.count()
    lb0, ub0 = model.lb.copy(), model.ub.copy()
    root = _lp(model, lb0, ub0)
    nodes = 1
    if root.status != "optimal":
        return MilpSolution("infeasible" if root.status == "infeasible" else root.status,
                            nodes=nodes)
    heap = [(root.objective, next(counter), lb0, ub0, root.x)]
    best_obj, best_x = np.inf, None

    while heap:
        bound, _, lb, ub, x = heapq.heappop(heap)
        if bound >= best_obj - PRUNE_TOL * max(1.0, abs(best_obj)):
            continue
        j = _branch_index(x, model.binary)
        if j < 0:
            # integral: fix the binaries exactly and polish the continuous part
            lb_f, ub_f = lb.copy(), ub.copy()
            fixed = np.round(x[model.binary])
            lb_f[model.binary] = fixed
            ub_f[model.binary] = fixed
            polished = _lp(model, lb_f, ub_f)
            nodes += 1
            if polished.status == "optimal" and polished.objective < best_obj:
                best_obj, best_x = polished.objective, polished.x
            continue
        for value in (0.0, 1.0):
            lb_c, ub_c = lb.copy(), ub.copy()
            lb_c[j] = ub_c[j] = value
            child = _lp(model, lb_c, ub_c)
            nodes += 1
            if nodes > node_limit:
                raise RuntimeError("branch-and-bound node limit reached")
            if child.status == "optimal" and child.objective < best_obj - PRUNE_TOL:
                heapq.heappush(heap, (child.objective, next(counter), lb_c, ub_c, child.x))

    if best_x is None:
        return MilpSolution("infeasible", nodes=nodes)
    x = best_x.copy()
    x[model.binary] = np.round(x[model.binary])
    return MilpSolution("optimal", x, float(model.c @ x), nodes)


def solve_highs(model: LinearModel):
    """Same contract through scipy's HiGHS interface."""
    from scipy.optimize import Bounds, LinearConstraint, milp

    lo = np.where(np.array(model.senses) == "L", -np.inf, model.rhs)
    hi = np.where(np.array(model.senses) == "G", np.inf, model.rhs)
    res = milp(
        model.c,
        constraints=[LinearConstraint(model.A, lo, hi)] if model.n_rows else [],
        integrality=model.binary.astype(int),
        bounds=Bounds(model.lb, model.ub),
        options={"mip_rel_gap": 1e-9, "presolve": True},
    )
    if res.status != 0 or res.x is None:
        return MilpSolution("infeasible")
    x = res.x.copy()
    x[model.binary] = np.round(x[model.binary])
    return MilpSolution("optimal", x, float(model.c @ x))


def solve_milp(inst, backend="builtin", node_limit=1_000_000):
    """Solve a :class:`MilpInstance` (or a bare :class:`LinearModel`) to optimality.

    ``backend='builtin'`` runs the in-house branch and bound; ``'highs'``
    delegates to HiGHS for horizons beyond desk scale.
    """
    model = inst.model if isinstance(inst, MilpInstance) else inst
    if backend == "builtin":
        sol = branch_and_bound(model, node_limit)
    elif backend == "highs":
        sol = solve_highs(model)
    else:
        raise ValueError(f"unknown MILP backend {backend!r}")
    if sol.optimal and isinstance(inst, MilpInstance):
        idx = inst.index
        sol.p = sol.x[idx["p"]].copy()
        sol.schedule = {
            "pg": sol.x[idx["pg"]].tolist(),
            "b_on": np.round(sol.x[idx["b_on"]]).astype(int).tolist(),
            "b_st": np.round(sol.x[idx["b_st"]]).astype(int).tolist(),
        }
    return sol

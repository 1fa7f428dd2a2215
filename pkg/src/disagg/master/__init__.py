"""Operator-side master problems: microgrid MILP, linear master, solvers, MPS I/O."""
import numpy as np

from .bnb import MilpSolution, solve_milp
from .model import (
    Aggregates,
    LinearModel,
    MicrogridParams,
    MilpInstance,
    build_linear_master,
    build_microgrid_milp,
    gen_cost,
    rows_per_period,
)
from .mps import export_mps, format_mps, parse_mps, read_mps
from .simplex import LPResult, NumericalInstability, solve_lp


def schedule_cost(inst: MilpInstance, x):
    """Objective rebuilt from the schedule: sum_t gen_cost(pg_t) * b_on_t + C_st * b_st_t."""
    idx = inst.index
    total = 0.0
    for t in range(inst.params.horizon):
        pg = min(max(float(x[idx["pg"][t]]), 0.0), inst.params.p_max)
        on = round(float(x[idx["b_on"][t]]))
        total += gen_cost(pg, inst.params) * on
        total += inst.params.start_cost * round(float(x[idx["b_st"][t]]))
    return total


__all__ = [
    "Aggregates", "LinearModel", "LPResult", "MicrogridParams", "MilpInstance",
    "MilpSolution", "NumericalInstability", "build_linear_master", "build_microgrid_milp",
    "export_mps", "format_mps", "gen_cost", "parse_mps", "read_mps", "rows_per_period",
    "schedule_cost", "solve_lp", "solve_milp",
]

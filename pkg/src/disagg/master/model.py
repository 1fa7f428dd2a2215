"""Linear model container and the microgrid unit-commitment master problem."""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..cuts import HoffmanCut

INF = float("inf")


@dataclass
class LinearModel:
    """min c.x  s.t.  A x (<=, >=, =) rhs,  lb <= x <= ub,  x_j in {0, 1} where binary."""

    name: str
    col_names: List[str]
    row_names: List[str]
    c: np.ndarray
    A: np.ndarray
    senses: List[str]
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray

    @property
    def n_cols(self):
        return len(self.col_names)

    @property
    def n_rows(self):
        return len(self.row_names)

    def __eq__(self, other):
        if not isinstance(other, LinearModel):
            return NotImplemented
        return (
            self.name == other.name
            and self.col_names == other.col_names
            and self.row_names == other.row_names
            and self.senses == other.senses
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.rhs, other.rhs)
            and np.array_equal(self.lb, other.lb)
            and np.array_equal(self.ub, other.ub)
            and np.array_equal(self.binary, other.binary)
        )

    def row_violations(self, x, tol=1e-6):
        """Indices and amounts of rows, bounds and integrality violated by ``x``."""
        x = np.asarray(x, dtype=float)
        out = []
        act = self.A @ x
        for i, (s, a, b) in enumerate(zip(self.senses, act, self.rhs)):
            bad = (s == "L" and a > b + tol) or (s == "G" and a < b - tol) or (
                s == "E" and abs(a - b) > tol)
            if bad:
                out.append((self.row_names[i], float(a - b)))
        for j in np.flatnonzero((x < self.lb - tol) | (x > self.ub + tol)):
            out.append((self.col_names[j] + ":bound", float(x[j])))
        for j in np.flatnonzero(self.binary):
            if abs(x[j] - round(x[j])) > tol:
                out.append((self.col_names[j] + ":integrality", float(x[j])))
        return out


def _names(prefix, count):
    width = max(4, len(str(count)))
    return [f"{prefix}{i:0{width}d}" for i in range(1, count + 1)]


class ModelBuilder:
    """Incremental row/column assembly with deterministic R0001/C0001 naming."""

    def __init__(self):
        self.c, self.lb, self.ub, self.binary, self.labels = [], [], [], [], []
        self.rows, self.senses, self.rhs, self.row_labels = [], [], [], []

    def add_col(self, label, cost=0.0, lb=0.0, ub=INF, binary=False):
        self.labels.append(label)
        self.c.append(float(cost))
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.binary.append(bool(binary))
        return len(self.c) - 1

    def add_row(self, label, coefs: Dict[int, float], sense, rhs):
        self.rows.append(dict(coefs))
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.row_labels.append(label)
        return len(self.rows) - 1

    def build(self, name):
        n, m = len(self.c), len(self.rows)
        A = np.zeros((m, n))
        for i, coefs in enumerate(self.rows):
            for j, v in coefs.items():
                A[i, j] += v
        return LinearModel(
            name=name,
            col_names=_names("C", n),
            row_names=_names("R", m),
            c=np.array(self.c),
            A=A,
            senses=list(self.senses),
            rhs=np.array(self.rhs),
            lb=np.array(self.lb),
            ub=np.array(self.ub),
            binary=np.array(self.binary, dtype=bool),
        )


@dataclass
class MicrogridParams:
    """Generator, PV and horizon data of the microgrid master problem.

    The cost is f(pg) = alpha_k + c_k * pg on [theta_{k-1}, theta_k); only
    alpha_1 is given, the other intercepts follow from continuity:
    alpha_{k+1} = alpha_k + (c_k - c_{k+1}) * theta_k.
    """

    horizon: int
    theta: np.ndarray
    marginal_costs: np.ndarray
    alpha1: float
    start_cost: float
    p_min: float
    p_max: float
    pv: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.marginal_costs = np.asarray(self.marginal_costs, dtype=float)
        self.pv = np.asarray(self.pv, dtype=float)
        if self.theta.shape != (self.marginal_costs.shape[0] + 1,):
            raise ValueError("need K+1 breakpoints for K marginal costs")
        if self.theta[0] != 0 or np.any(np.diff(self.theta) <= 0):
            raise ValueError("breakpoints must start at 0 and increase strictly")
        if not 0 <= self.p_min <= self.p_max or self.p_max != self.theta[-1]:
            raise ValueError("need 0 <= p_min <= p_max == theta[-1]")
        if self.pv.shape != (self.horizon,):
            raise ValueError("pv must have one value per period")

    @property
    def n_segments(self):
        return self.marginal_costs.shape[0]

    @property
    def alphas(self):
        a = [float(self.alpha1)]
        for k in range(1, self.n_segments):
            c = self.marginal_costs
            a.append(a[-1] + (c[k - 1] - c[k]) * self.theta[k])
        return np.array(a)

    def to_dict(self):
        return {
            "horizon": self.horizon,
            "theta": self.theta.tolist(),
            "marginal_costs": self.marginal_costs.tolist(),
            "alpha1": self.alpha1,
            "start_cost": self.start_cost,
            "p_min": self.p_min,
            "p_max": self.p_max,
            "pv": self.pv.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def gen_cost(pg, params: MicrogridParams):
    """Generation cost f(pg), continuous and piecewise linear on [0, p_max]."""
    if not 0.0 <= pg <= params.p_max:
        raise ValueError(f"pg={pg} outside [0, {params.p_max}]")
    k = int(np.searchsorted(params.theta, pg, side="right")) - 1
    k = min(max(k, 0), params.n_segments - 1)
    return float(params.alphas[k] + params.marginal_costs[k] * pg)


@dataclass
class Aggregates:
    """Aggregate agent data the operator is allowed to know."""

    sum_demand: float
    sum_lower: np.ndarray
    sum_upper: np.ndarray

    def __post_init__(self):
        self.sum_lower = np.asarray(self.sum_lower, dtype=float)
        self.sum_upper = np.asarray(self.sum_upper, dtype=float)


@dataclass
class MilpInstance:
    """Microgrid master MILP plus the index maps needed to read a solution."""

    model: LinearModel
    params: MicrogridParams
    aggregates: Aggregates
    cuts: List[HoffmanCut]
    index: Dict[str, np.ndarray]
    labels: List[str] = field(default_factory=list)

    @property
    def n_binaries(self):
        return int(self.model.binary.sum())

    @property
    def n_continuous(self):
        return int((~self.model.binary).sum())


def rows_per_period(K):
    """Rows generated per period by the microgrid template (excluding the demand row)."""
    if K == 1:
        return 5
    return 2 * K + 3


def _check_aggregates(agg: Aggregates, T):
    if agg.sum_lower.shape != (T,) or agg.sum_upper.shape != (T,):
        raise ValueError("aggregate bounds must have one value per period")
    tol = 1e-9 * max(1.0, abs(agg.sum_demand))
    if np.any(agg.sum_lower > agg.sum_upper + tol):
        raise ValueError("aggregate lower bound exceeds upper bound")
    if not agg.sum_lower.sum() - tol <= agg.sum_demand <= agg.sum_upper.sum() + tol:
        raise ValueError("aggregate demand outside the aggregate bounds")


def add_cut_rows(builder, p_cols, cuts: Sequence[HoffmanCut]):
    for cut in cuts:
        if not cut.t0 or max(cut.t0) >= len(p_cols) or min(cut.t0) < 0:
            raise ValueError(f"cut period set {sorted(cut.t0)} outside the horizon")
        builder.add_row(f"cut{sorted(cut.t0)}", {int(p_cols[t]): 1.0 for t in sorted(cut.t0)},
                        "L", cut.a_t0)


def build_microgrid_milp(params: MicrogridParams, aggregates: Aggregates,
                         cuts: Optional[Sequence[HoffmanCut]] = None, name="MICROGRD"):
    """Assemble the unit-commitment master problem with the given cuts appended.

    Columns per period: p, pg, pg_k (k=1..K) continuous; b_on, b_st, b_k
    (k=1..K-1) binary. The allocation bounds sum_lower <= p <= sum_upper and the
    segment widths are column bounds; everything else is a row. The start-up
    indicator of the first period obeys b_st_1 >= b_on_1 (cold start).
    """
    cuts = list(cuts or [])
    T, K = params.horizon, params.n_segments
    _check_aggregates(aggregates, T)
    th, c = params.theta, params.marginal_costs
    width = np.diff(th)
    b = ModelBuilder()

    p = [b.add_col(f"p[{t}]", 0.0, aggregates.sum_lower[t], aggregates.sum_upper[t])
         for t in range(T)]
    pg = [b.add_col(f"pg[{t}]", 0.0, 0.0, params.p_max) for t in range(T)]
    pgk = [[b.add_col(f"pg[{t},{k}]", c[k], 0.0, width[k]) for k in range(K)]
           for t in range(T)]
    bon = [b.add_col(f"b_on[{t}]", params.alpha1, 0.0, 1.0, True) for t in range(T)]
    bst = [b.add_col(f"b_st[{t}]", params.start_cost, 0.0, 1.0, True) for t in range(T)]
    bk = [[b.add_col(f"b[{t},{k}]", 0.0, 0.0, 1.0, True) for k in range(K - 1)]
          for t in range(T)]

    for t in range(T):
        coefs = {pg[t]: 1.0}
        for k in range(K):
            coefs[pgk[t][k]] = -1.0
        b.add_row(f"split[{t}]", coefs, "E", 0.0)
        if K >= 2:
            # segment k is full when its indicator is on; segment k+1 needs indicator k
            b.add_row(f"seg_lo[{t},0]", {pgk[t][0]: 1.0, bk[t][0]: -width[0]}, "G", 0.0)
            for k in range(1, K - 1):
                b.add_row(f"seg_lo[{t},{k}]", {pgk[t][k]: 1.0, bk[t][k]: -width[k]}, "G", 0.0)
                b.add_row(f"seg_hi[{t},{k}]", {pgk[t][k]: 1.0, bk[t][k - 1]: -width[k]}, "L", 0.0)
            b.add_row(f"seg_hi[{t},{K - 1}]",
                      {pgk[t][K - 1]: 1.0, bk[t][K - 2]: -width[K - 1]}, "L", 0.0)
        start = {bst[t]: 1.0, bon[t]: -1.0}
        if t > 0:
            start[bon[t - 1]] = 1.0
        b.add_row(f"start[{t}]", start, "G", 0.0)
        b.add_row(f"on_lo[{t}]", {pg[t]: 1.0, bon[t]: -params.p_min}, "G", 0.0)
        b.add_row(f"on_hi[{t}]", {pg[t]: 1.0, bon[t]: -params.p_max}, "L", 0.0)
        b.add_row(f"supply[{t}]", {p[t]: 1.0, pg[t]: -1.0}, "L", params.pv[t])
    b.add_row("demand", {j: 1.0 for j in p}, "E", aggregates.sum_demand)
    add_cut_rows(b, p, cuts)

    index = {
        "p": np.array(p), "pg": np.array(pg), "pgk": np.array(pgk, dtype=int).reshape(T, K),
        "b_on": np.array(bon), "b_st": np.array(bst),
        "bk": np.array(bk, dtype=int).reshape(T, max(K - 1, 0)),
    }
    return MilpInstance(b.build(name), params, aggregates, cuts, index, b.labels)


def build_linear_master(cost, aggregates: Aggregates, cuts=None, name="LINMASTR"):
    """min cost.p  s.t.  sum(p) = sum_demand,  sum_lower <= p <= sum_upper, cuts."""
    cost = np.asarray(cost, dtype=float)
    T = cost.shape[0]
    _check_aggregates(aggregates, T)
    b = ModelBuilder()
    p = [b.add_col(f"p[{t}]", cost[t], aggregates.sum_lower[t], aggregates.sum_upper[t])
         for t in range(T)]
    b.add_row("demand", {j: 1.0 for j in p}, "E", aggregates.sum_demand)
    add_cut_rows(b, p, list(cuts or []))
    return b.build(name), np.array(p)

"""Bounded-variable primal simplex (two phases, dense revised form).

Inequality rows get a slack column (+1 for <=, -1 for >=, bounds [0, inf));
phase 1 minimises the sum of one artificial per row starting from every
structural column at its lower bound. Entering columns are priced by
Dantzig's rule; after a run of degenerate pivots the method switches to
Bland's rule (lowest index enters, lowest basis position leaves on ties)
until progress resumes.
"""
from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9
OPT_TOL = 1e-9
REFACTOR_EVERY = 50
DEGENERATE_RUN = 30


class NumericalInstability(RuntimeError):
    pass


@dataclass
class LPResult:
    status: str  # 'optimal' | 'infeasible' | 'unbounded'
    x: np.ndarray = None
    objective: float = None
    iterations: int = 0


class _Tableau:
    def __init__(self, A, b, lb, ub, basis, at_upper):
        self.A, self.b, self.lb, self.ub = A, b, lb, ub
        self.m, self.n = A.shape
        self.basis = list(basis)
        self.at_upper = at_upper  # for nonbasic columns
        self.is_basic = np.zeros(self.n, dtype=bool)
        self.is_basic[self.basis] = True
        self.iterations = 0
        self.refactor()

    def nonbasic_values(self):
        x = np.where(self.at_upper, self.ub, self.lb)
        x[self.is_basic] = 0.0
        return x

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalInstability("singular basis") from exc
        self.since_refactor = 0
        self.x = self.nonbasic_values()
        self.x[self.basis] = self.Binv @ (self.b - self.A @ self.x)

    def run(self, cost, max_iters):
        bland = False
        degenerate = 0
        while True:
            if self.iterations >= max_iters:
                raise NumericalInstability("simplex iteration limit reached (cycling?)")
            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.A
            movable = ~self.is_basic & (self.ub > self.lb)
            improve_up = movable & ~self.at_upper & (d < -OPT_TOL)
            improve_dn = movable & self.at_upper & (d > OPT_TOL)
            cand = np.flatnonzero(improve_up | improve_dn)
            if cand.size == 0:
                return "optimal"
            j = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if improve_up[j] else -1.0

            alpha = self.Binv @ self.A[:, j]
            dxb = -direction * alpha
            theta = self.ub[j] - self.lb[j]
            leave, leave_to_upper, best_piv = -1, False, 0.0
            for i in range(self.m):
                r = dxb[i]
                if abs(r) <= PIVOT_TOL:
                    continue
                bi = self.basis[i]
                if r < 0:
                    step = (self.x[bi] - self.lb[bi]) / -r
                    to_upper = False
                else:
                    if self.ub[bi] == np.inf:
                        continue
                    step = (self.ub[bi] - self.x[bi]) / r
                    to_upper = True
                step = max(step, 0.0)
                if step < theta - 1e-12:
                    theta, leave, leave_to_upper, best_piv = step, i, to_upper, abs(r)
                elif leave >= 0 and step <= theta + 1e-12:
                    # tie: Bland takes the lowest basic index, else the largest pivot
                    if (bland and bi < self.basis[leave]) or (not bland and abs(r) > best_piv):
                        theta, leave, leave_to_upper, best_piv = min(step, theta), i, to_upper, abs(r)
            if theta == np.inf:
                return "unbounded"

            self.iterations += 1
            if theta <= 1e-12:
                degenerate += 1
                if degenerate > DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
                bland = False

            self.x[j] += direction * theta
            self.x[self.basis] += theta * dxb
            if leave < 0:
                self.at_upper[j] = not self.at_upper[j]
                continue
            out = self.basis[leave]
            self.x[out] = self.ub[out] if leave_to_upper else self.lb[out]
            self.at_upper[out] = leave_to_upper
            self.is_basic[out] = False
            self.is_basic[j] = True
            self.at_upper[j] = False
            self.basis[leave] = j
            piv = alpha[leave]
            row = self.Binv[leave] / piv
            self.Binv -= np.outer(alpha, row)
            self.Binv[leave] = row
            self.since_refactor += 1
            if self.since_refactor >= REFACTOR_EVERY:
                self.refactor()


def solve_lp(c, A, senses, rhs, lb, ub, max_iters=50_000):
    """Minimise c.x subject to the rows and column bounds; every lb must be finite."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    m, n = A.shape
    if np.any(~np.isfinite(lb)):
        raise ValueError("free or unbounded-below columns are not supported")
    if np.any(lb > ub + FEAS_TOL):
        return LPResult("infeasible")
    ub = np.maximum(ub, lb)

    ineq = [i for i, s in enumerate(senses) if s != "E"]
    S = np.zeros((m, len(ineq)))
    for k, i in enumerate(ineq):
        S[i, k] = 1.0 if senses[i] == "L" else -1.0
    n_s = len(ineq)

    x0 = np.concatenate([lb, np.zeros(n_s)])
    full = np.hstack([A, S])
    resid = rhs - full @ x0
    art = np.diag(np.where(resid >= 0, 1.0, -1.0))
    big = np.hstack([full, art])
    big_lb = np.concatenate([lb, np.zeros(n_s), np.zeros(m)])
    big_ub = np.concatenate([ub, np.full(n_s, np.inf), np.full(m, np.inf)])
    n_real = n + n_s
    basis = list(range(n_real, n_real + m))
    tab = _Tableau(big, rhs, big_lb, big_ub, basis, np.zeros(n_real + m, dtype=bool))

    phase1 = np.concatenate([np.zeros(n_real), np.ones(m)])
    tab.run(phase1, max_iters)
    tab.refactor()
    infeas = float(tab.x[n_real:].sum())
    if infeas > FEAS_TOL * max(1.0, np.abs(rhs).max(initial=0.0)):
        return LPResult("infeasible", iterations=tab.iterations)

    # pin artificials at zero and push basic ones out where possible
    tab.ub[n_real:] = 0.0
    for pos in range(m):
        bj = tab.basis[pos]
        if bj < n_real:
            continue
        row = tab.Binv[pos] @ big[:, :n_real]
        row[tab.is_basic[:n_real]] = 0.0
        cand = np.flatnonzero(np.abs(row) > 1e-7)
        if cand.size == 0:
            continue  # redundant row; the artificial stays basic at zero
        j = int(cand[np.argmax(np.abs(row[cand]))])
        tab.is_basic[bj] = False
        tab.at_upper[bj] = False
        tab.is_basic[j] = True
        tab.at_upper[j] = False
        tab.basis[pos] = j
        tab.refactor()

    phase2 = np.concatenate([c, np.zeros(n_s + m)])
    status = tab.run(phase2, max_iters)
    if status == "unbounded":
        return LPResult("unbounded", iterations=tab.iterations)
    tab.refactor()
    x = np.clip(tab.x[:n], lb, ub)
    return LPResult("optimal", x, float(c @ x), tab.iterations)

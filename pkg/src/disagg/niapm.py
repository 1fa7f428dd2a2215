"""Non-intrusive APM: alternating projections run jointly by an operator and agents.

Agents project their own rows on X_n. The operator learns the aggregate
through :func:`~disagg.smc.smca`, broadcasts the correction
nu = (p - S) / N, and each agent applies it locally. When the inner loop
stalls, either the last iterate is an eps_dis-disaggregation, or the operator
reads off a violated cut

    sum_{t in T0} p_t <= A_T0,   T0 = {t : 1.5 * B * eps_cvg < nu_t},
    A_T0 = sum_{t in T0} S_t,

or, failing both, halves eps_cvg and keeps iterating.

The stopping test itself goes through secure aggregation: every agent shares
a scalar (its squared local displacement scaled by eps^-2 for the Euclidean
norm, or a 0/1 "still moving" flag for the max-row norm), so the operator
only ever receives sigma vectors.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .apm import NORMS, profile_norm, rate_bound
from .kernels import get_backend
from .polytope import _raise_infeasible, as_agent_set
from .smc import OPERATOR, FixedPointCodec, smca


class HardIterationCap(RuntimeError):
    def __init__(self, msg, stats):
        self.stats = stats
        super().__init__(f"{msg} ({stats})")


@dataclass
class NiapmConfig:
    eps_cvg0: float = 0.1
    eps_dis: float = 0.01
    b_const: Optional[float] = None  # None: 2 / (1 - rate_bound(N, T))
    norm: str = "opmax"
    share_bound: Optional[float] = None  # None: 2 * max(1, max|p| / N)
    rng_seed: int = 0
    stop_on: str = "x"
    fixed_point: bool = False
    max_total_iters: int = 10**6
    min_eps: float = 1e-15

    def __post_init__(self):
        if not self.eps_cvg0 > 0 or not self.eps_dis > 0:
            raise ValueError("eps_cvg0 and eps_dis must be positive")
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}")
        if self.stop_on not in ("x", "y"):
            raise ValueError("stop_on must be 'x' or 'y'")

    def resolve_b(self, N, T):
        lowest = 1.0 / (1.0 - rate_bound(N, T))
        b = 2.0 * lowest if self.b_const is None else float(self.b_const)
        if not b > lowest:
            raise ValueError(f"b_const must exceed 1/(1 - rho) = {lowest:.6g}")
        return b


@dataclass
class NiapmStats:
    apm_iterations: int = 0
    smca_rounds: int = 0
    eps_halvings: int = 0
    final_eps: float = 0.0


@dataclass
class NiapmResult:
    """Either a disaggregation (``kind == 'disag'``) or a violated cut (``'cut'``).

    ``x`` is what the agents hold locally; the operator never sees it.
    """

    kind: str
    stats: NiapmStats
    x: Optional[np.ndarray] = None
    t0: Optional[frozenset] = None
    a_t0: Optional[float] = None
    nu: Optional[np.ndarray] = None
    gap: float = 0.0
    trace: Optional[list] = field(default=None, repr=False)

    @property
    def is_disag(self):
        return self.kind == "disag"


def _secure_stop(local, tag, cfg, k, ledger, codec):
    """Operator learns only sum_n local[n] (through secret sharing)."""
    column = np.asarray(local, dtype=float).reshape(-1, 1)
    return float(smca(column, 2.0, [cfg.rng_seed, k, 1], ledger, round=k, tag=tag,
                      codec=codec)[0])


def run_niapm(p, agents, cfg=None, ledger=None, *, y0=None, trace=False, backend=None):
    cfg = cfg or NiapmConfig()
    agents = as_agent_set(agents)
    agents.check_nonempty()
    impl = get_backend(backend)
    p = np.ascontiguousarray(p, dtype=float)
    N, T = agents.n_agents, agents.horizon
    if N < 2:
        raise ValueError("the non-intrusive protocol needs at least two agents")
    B = cfg.resolve_b(N, T)
    share_bound = cfg.share_bound or 2.0 * max(1.0, float(np.max(np.abs(p))) / N)
    codec = FixedPointCodec() if cfg.fixed_point else None

    y = agents.uniform_start() if y0 is None else np.array(y0, dtype=float, order="C")
    x = np.empty_like(y)
    prev = y.copy()
    stats = NiapmStats()
    history = [] if trace else None
    eps = cfg.eps_cvg0
    k = 0

    while True:
        while True:
            if k >= cfg.max_total_iters:
                stats.final_eps = eps
                raise HardIterationCap("NI-APM iteration cap reached", stats)
            # agents: local projections
            bad = impl.project_rows(y, agents.demand, agents.lower, agents.upper, x)
            if bad >= 0:
                _raise_infeasible(agents, bad)
            # operator: aggregate through secret sharing, broadcast the correction
            S = smca(x, share_bound, [cfg.rng_seed, k], ledger, round=k, codec=codec)
            nu = (p - S) / N
            if ledger is not None and not ledger.keep_payloads:
                ledger.record_broadcast(N, "nu")
            elif ledger is not None:
                for n in range(N):
                    ledger.record(k, 2, OPERATOR, n, "nu",
                                  nu.copy() if ledger.keep_payloads else None)
            # agents: local correction
            y_new = x + nu[None, :]
            moved = x - prev if cfg.stop_on == "x" else y_new - y
            if cfg.stop_on == "x" and k == 0:
                done = False  # a single x-iterate cannot show convergence
            elif cfg.norm == "euclidean":
                local = np.sum(moved * moved, axis=1) / (eps * eps)
                done = _secure_stop(local, "stop", cfg, k, ledger, codec) < 1.0
            else:
                local = (np.abs(moved).sum(axis=1) >= eps).astype(float)
                done = _secure_stop(local, "stop", cfg, k, ledger, codec) < 0.5
            prev[...] = x
            y = y_new
            k += 1
            stats.apm_iterations = stats.smca_rounds = k
            if trace:
                history.append((x.copy(), y.copy()))
            if done:
                break

        stats.final_eps = eps
        # x - y = -nu in every row, so the operator can evaluate the gap itself
        gap = profile_norm(np.broadcast_to(-nu, (N, T)), cfg.norm)
        if gap <= cfg.eps_dis:
            return NiapmResult("disag", stats, x=x.copy(), nu=nu, gap=gap, trace=history)

        t0 = frozenset(int(t) for t in np.flatnonzero(nu > 1.5 * B * eps))
        mask = np.zeros(T, dtype=bool)
        mask[sorted(t0)] = True
        a_t0 = float(S[mask].sum())
        if a_t0 - float(p[mask].sum()) < 0:
            return NiapmResult("cut", stats, x=x.copy(), t0=t0, a_t0=a_t0, nu=nu, gap=gap,
                               trace=history)

        eps /= 2.0
        stats.eps_halvings += 1
        if eps < cfg.min_eps:
            raise HardIterationCap("eps_cvg underflow without a certified cut", stats)

"""Plain alternating projections between X = prod_n X_n and Y_p."""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .polytope import _raise_infeasible, as_agent_set

NORMS = ("euclidean", "opmax")


def profile_norm(a, norm="euclidean"):
    """Frobenius norm, or the max-row l1 norm max_n sum_t |a_nt| ('opmax')."""
    a = np.asarray(a, dtype=float)
    if norm == "euclidean":
        return float(np.sqrt(np.sum(a * a)))
    if norm == "opmax":
        if a.ndim == 1:
            return float(np.abs(a).sum())
        return float(np.abs(a).sum(axis=1).max())
    raise ValueError(f"unknown norm {norm!r}")


@dataclass
class ApmConfig:
    eps_cvg: float = 1e-8
    max_iters: int = 10**6
    norm: str = "euclidean"
    # 'y': stop on y-iterate displacement; 'x': on x-iterate displacement
    stop_on: str = "y"

    def __post_init__(self):
        if not self.eps_cvg > 0:
            raise ValueError("eps_cvg must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}")
        if self.stop_on not in ("x", "y"):
            raise ValueError("stop_on must be 'x' or 'y'")


@dataclass
class ApmResult:
    x_final: np.ndarray
    y_final: np.ndarray
    nu_final: np.ndarray
    iterations: int
    gap: float
    trace: Optional[list] = field(default=None, repr=False)


class MaxItersExceeded(RuntimeError):
    def __init__(self, result):
        self.result = result
        super().__init__(
            f"APM did not converge in {result.iterations} iterations (gap {result.gap:.3e})"
        )


def run_apm(p, agents, y0=None, cfg=None, *, trace=False, backend=None):
    """Alternate x <- P_X(y), y <- P_Y(x) until the iterate displacement is below eps.

    ``trace=True`` records every (x, y) pair; the result's ``trace[k]`` is the
    pair after k+1 double projections.
    """
    cfg = cfg or ApmConfig()
    agents = as_agent_set(agents)
    agents.check_nonempty()
    impl = kernels.get_backend(backend)
    p = np.ascontiguousarray(p, dtype=float)
    N, T = agents.n_agents, agents.horizon
    if p.shape != (T,):
        raise ValueError("allocation length must equal the horizon")
    y = agents.uniform_start() if y0 is None else np.array(y0, dtype=float, order="C")
    if y.shape != (N, T):
        raise ValueError("y0 must have shape (N, T)")

    x = np.empty_like(y)
    y_new = np.empty_like(y)
    nu = np.empty(T)
    prev = y.copy()
    history = [] if trace else None
    k = 0
    while True:
        bad = impl.apm_step(y, agents.demand, agents.lower, agents.upper, p, x, y_new, nu)
        if bad >= 0:
            _raise_infeasible(agents, bad)
        k += 1
        if trace:
            history.append((x.copy(), y_new.copy()))
        if cfg.stop_on == "y":
            step = profile_norm(y_new - y, cfg.norm)
        else:
            # the first x-iterate has no predecessor to compare with
            step = np.inf if k == 1 else profile_norm(x - prev, cfg.norm)
            prev[...] = x
        y, y_new = y_new, y
        if step < cfg.eps_cvg or k >= cfg.max_iters:
            break

    result = ApmResult(
        x_final=x.copy(),
        y_final=y.copy(),
        nu_final=nu.copy(),
        iterations=k,
        gap=profile_norm(x - y, cfg.norm),
        trace=history,
    )
    if not step < cfg.eps_cvg:
        raise MaxItersExceeded(result)
    return result


def rate_bound(N, T):
    """Geometric contraction bound rho_NT = 1 - 4 / (N (T+1)^2 (T-1))."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if T < 2:
        raise ValueError("T must be >= 2")
    return 1.0 - 4.0 / (N * (T + 1) ** 2 * (T - 1))


def iteration_bound(initial_dist, eps, rho):
    """Smallest k with 2 * initial_dist * rho**k <= eps."""
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    if eps <= 0 or initial_dist < 0:
        raise ValueError("eps must be positive and initial_dist nonnegative")
    if 2.0 * initial_dist <= eps:
        return 0
    k = max(0, math.ceil(math.log(eps / (2.0 * initial_dist)) / math.log(rho)))
    while 2.0 * initial_dist * rho**k > eps:
        k += 1
    while k > 0 and 2.0 * initial_dist * rho ** (k - 1) <= eps:
        k -= 1
    return k

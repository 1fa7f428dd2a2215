"""Time the projection kernels on both backends.

    python3 benchmarks/bench_kernels.py [--sizes 16x24,64x24,256x24] [--repeat 5]

Prints one line per (backend, size) with the best time per call of
``project_rows`` and of ``apm_step``, plus a full APM run to 1e-8.
"""
import argparse
import timeit

import numpy as np

from disagg.apm import ApmConfig, run_apm
from disagg.kernels import available_backends, get_backend
from disagg.polytope import AgentSet


def problem(N, T, seed=0):
    rng = np.random.default_rng(seed)
    lower = rng.uniform(0, 10, (N, T))
    upper = lower + rng.uniform(0, 5, (N, T))
    demand = rng.uniform(lower.sum(1), upper.sum(1))
    agents = AgentSet(demand, lower, upper)
    # an allocation inside the aggregate box with the right total
    w = rng.random(T)
    p = lower.sum(0) + (demand.sum() - lower.sum()) * w / w.sum()
    p = np.clip(p, lower.sum(0), upper.sum(0))
    p *= demand.sum() / p.sum()
    return agents, p


def best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16x24,64x24,256x24")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    sizes = [tuple(int(v) for v in s.split("x")) for s in args.sizes.split(",")]
    backends = available_backends()
    print(f"{'backend':8} {'N':>5} {'T':>4} {'project_rows':>14} {'apm_step':>12} "
          f"{'apm run':>10} {'iters':>6}")
    for N, T in sizes:
        agents, p = problem(N, T)
        Y = agents.uniform_start()
        times = {}
        for name in backends:
            k = get_backend(name)
            X, Y2, nu = np.empty_like(Y), np.empty_like(Y), np.empty(T)
            number = 200 if name == "cython" else 20
            t_rows = best(lambda: k.project_rows(Y, agents.demand, agents.lower, agents.upper, X),
                          args.repeat, number)
            t_step = best(lambda: k.apm_step(Y, agents.demand, agents.lower, agents.upper, p,
                                             X, Y2, nu), args.repeat, number)
            res = None

            def full():
                nonlocal res
                res = run_apm(p, agents, cfg=ApmConfig(eps_cvg=1e-8, max_iters=10**6), backend=name)

            t_run = best(full, 1, 1)
            times[name] = t_step
            print(f"{name:8} {N:5d} {T:4d} {t_rows * 1e6:11.1f} us {t_step * 1e6:9.1f} us "
                  f"{t_run:8.3f} s {res.iterations:6d}")
        if len(times) == 2:
            print(f"{'':8} {N:5d} {T:4d} apm_step speed-up {times['python'] / times['cython']:.1f}x")


if __name__ == "__main__":
    main()

"""Batch runs over several agent counts: CSV summary, JSON manifest, optional traces."""
import csv
import json
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..niapm import NiapmConfig
from .driver import solve_instance
from .instances import generate_instance
from .records import config_to_dict, package_version

CSV_FIELDS = ["n_agents", "instance", "seed", "status", "n_master_problems", "n_projections",
              "n_cuts", "repeated_t0", "objective", "wall_time", "error"]


def instance_seed(seed0, n_agents, i):
    return int(np.random.SeedSequence([seed0, n_agents, i]).generate_state(1, np.uint64)[0] >> 1)


def production_trace(spec, outcome):
    """Per-period generation, PV, allocation and per-agent consumption of the final plan."""
    sched = outcome.solution.schedule
    rows = []
    for t in range(spec.horizon):
        rows.append({
            "t": t,
            "pv": float(spec.params.pv[t]),
            "pg": float(sched["pg"][t]),
            "b_on": int(sched["b_on"][t]),
            "p": float(outcome.solution.p[t]),
            **{f"x{n}": float(outcome.profiles[n, t]) for n in range(spec.n_agents)},
        })
    return rows


def _one(job):
    n_agents, i, seed, cfg, master_backend, trace_dir = job
    row = {"n_agents": n_agents, "instance": i, "seed": seed}
    start = time.perf_counter()
    try:
        spec = generate_instance(n_agents, seed)
        out = solve_instance(spec, cfg, master_backend=master_backend, keep_ledger=False)
        m = out.metrics
        row.update(status="ok", n_master_problems=m.n_master_problems,
                   n_projections=m.n_projections, n_cuts=m.n_cuts,
                   repeated_t0=m.n_cuts - len({c.t0 for c in m.cuts}),
                   objective=m.objective, error="")
        if trace_dir is not None:
            path = Path(trace_dir) / f"trace_N{n_agents}_{i:03d}.csv"
            rows = production_trace(spec, out)
            with open(path, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(rows[0]))
                w.writeheader()
                w.writerows(rows)
    except Exception as exc:  # a failed instance is reported, the batch goes on
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    row["wall_time"] = time.perf_counter() - start
    return row


def summarize(rows):
    """Per-N means over the successful instances."""
    out = []
    for n in sorted({r["n_agents"] for r in rows}):
        ok = [r for r in rows if r["n_agents"] == n and r["status"] == "ok"]
        failed = sum(1 for r in rows if r["n_agents"] == n and r["status"] != "ok")
        summary = {"n_agents": n, "instance": "mean", "seed": "", "status": f"{len(ok)} ok, "
                   f"{failed} failed", "error": ""}
        for key in ("n_master_problems", "n_projections", "n_cuts", "repeated_t0",
                    "objective", "wall_time"):
            summary[key] = float(np.mean([r[key] for r in ok])) if ok else float("nan")
        out.append(summary)
    return out


def run_benchmark(n_values, instances_per_n, seed0, cfg=None, out_csv=None, *,
                  workers=1, master_backend="highs", traces=False, timing=True,
                  progress=None):
    """Run ``instances_per_n`` generated instances for every N and summarise.

    Returns ``(rows, summary)``. With ``out_csv`` the per-instance rows and the
    per-N summary rows go to that CSV and a manifest goes next to it as JSON.
    Instances are independent and run in ``workers`` processes.
    """
    cfg = cfg or NiapmConfig()
    trace_dir = None
    if traces and out_csv is not None:
        trace_dir = Path(out_csv).with_suffix("")
        trace_dir = trace_dir.parent / (trace_dir.name + "_traces")
        trace_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(n, i, instance_seed(seed0, n, i), cfg, master_backend,
             None if trace_dir is None else str(trace_dir))
            for n in n_values for i in range(instances_per_n)]
    rows = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for row in pool.map(_one, jobs):
                rows.append(row)
                if progress:
                    progress(row)
    else:
        for job in jobs:
            row = _one(job)
            rows.append(row)
            if progress:
                progress(row)
    summary = summarize(rows)
    if not timing:
        for r in rows + summary:
            r["wall_time"] = ""
    if out_csv is not None:
        write_csv(out_csv, rows + summary)
        manifest = {
            "schema": "disagg.bench/1",
            "version": package_version(),
            "n_values": list(n_values),
            "instances_per_n": instances_per_n,
            "seed0": seed0,
            "config": config_to_dict(cfg),
            "master_backend": master_backend,
            "workers": workers,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "cpu_count": os.cpu_count(),
            "summary": summary,
            "traces": None if trace_dir is None else str(trace_dir),
        }
        with open(Path(out_csv).with_suffix(".json"), "w") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=1, default=str)
            fh.write("\n")
    return rows, summary


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in CSV_FIELDS})

"""Command line: gen, solve, bench, export-mps, check.

Settings resolve as command-line flag, then a DISAGG_* environment variable,
then the built-in default.
"""
import argparse
import json
import os
import sys

from ..cuts import HoffmanCut
from ..master import Aggregates, build_microgrid_milp, export_mps
from ..niapm import NiapmConfig
from .benchmark import run_benchmark
from .driver import solve_instance
from .instances import InstanceSpec, generate_instance
from .records import audit_record, build_run_record, dumps_record

DEFAULTS = {
    "eps_dis": 0.01,
    "eps_cvg": 0.1,
    "norm": "opmax",
    "master": "highs",
    "workers": 1,
    "backend": None,
}
CASTS = {"eps_dis": float, "eps_cvg": float, "workers": int}


def setting(args, name):
    value = getattr(args, name, None)
    if value is not None:
        return value
    env = os.environ.get("DISAGG_" + name.upper())
    if env:
        return CASTS.get(name, str)(env)
    return DEFAULTS[name]


def niapm_config(args):
    return NiapmConfig(eps_cvg0=setting(args, "eps_cvg"), eps_dis=setting(args, "eps_dis"),
                       norm=setting(args, "norm"))


def _add_run_flags(p):
    p.add_argument("--eps-dis", dest="eps_dis", type=float, help="disaggregation tolerance")
    p.add_argument("--eps-cvg", dest="eps_cvg", type=float, help="initial inner-loop tolerance")
    p.add_argument("--norm", choices=["opmax", "euclidean"])
    p.add_argument("--master", choices=["highs", "builtin"], help="MILP solver")
    p.add_argument("--backend", choices=["cython", "python"], help="projection kernels")


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_gen(args):
    spec = generate_instance(args.agents, args.seed, horizon=args.horizon)
    _write_text(args.out, spec.to_json())
    return 0


def cmd_solve(args):
    spec = InstanceSpec.from_dict(_read_json(args.spec))
    cfg = niapm_config(args)
    master = setting(args, "master")
    out = solve_instance(spec, cfg, master_backend=master, backend=setting(args, "backend"))
    rec = build_run_record(spec, cfg, out, master_backend=master, timing=args.timing)
    _write_text(args.out, dumps_record(rec))
    m = out.metrics
    print(f"objective {m.objective:.6f}  master problems {m.n_master_problems}  "
          f"projections {m.n_projections}  cuts {m.n_cuts}", file=sys.stderr)
    return 0


def cmd_bench(args):
    n_values = [int(v) for v in args.agents.split(",") if v]

    def progress(row):
        print(f"N={row['n_agents']} #{row['instance']} {row['status']} "
              f"masters={row.get('n_master_problems', '-')} "
              f"projections={row.get('n_projections', '-')} "
              f"{row['wall_time']:.1f}s", file=sys.stderr)

    _, summary = run_benchmark(n_values, args.per_n, args.seed, niapm_config(args), args.out,
                               workers=setting(args, "workers"),
                               master_backend=setting(args, "master"), traces=args.traces,
                               progress=progress)
    for s in summary:
        print(f"N={s['n_agents']}: mean master problems {s['n_master_problems']:.1f}, "
              f"mean projections {s['n_projections']:.1f} ({s['status']})")
    return 0


def cmd_export_mps(args):
    spec = InstanceSpec.from_dict(_read_json(args.spec))
    agents = spec.agents
    agg = Aggregates(float(agents.demand.sum()), agents.lower.sum(axis=0),
                     agents.upper.sum(axis=0))
    cuts = []
    if args.run:
        cuts = [HoffmanCut.from_dict(c) for c in _read_json(args.run)["cuts"]]
    export_mps(build_microgrid_milp(spec.params, agg, cuts), args.out)
    return 0


def cmd_check(args):
    rep = audit_record(_read_json(args.run), resolve=not args.no_resolve)
    for line in rep.lines():
        print(line)
    print("all checks passed" if rep.passed else "AUDIT FAILED")
    return 0 if rep.passed else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="disagg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random microgrid instance")
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, default=24)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run the cutting-plane loop on an instance")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", default="-")
    p.add_argument("--timing", action="store_true", help="store wall time in the record")
    _add_run_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="batch of generated instances per agent count")
    p.add_argument("--agents", default="16", help="comma separated agent counts")
    p.add_argument("--per-n", dest="per_n", type=int, default=10)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True, help="CSV path; the manifest goes next to it")
    p.add_argument("--workers", type=int)
    p.add_argument("--traces", action="store_true", help="write per-instance schedules")
    _add_run_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-mps", help="write the master problem as fixed MPS")
    p.add_argument("--spec", required=True)
    p.add_argument("--run", help="include the cuts stored in this run record")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_mps)

    p = sub.add_parser("check", help="re-audit a stored run record")
    p.add_argument("--run", required=True)
    p.add_argument("--no-resolve", action="store_true", help="skip re-solving the master")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""JSON run records and the audit that re-checks them."""
import json
from dataclasses import dataclass, field
from typing import List

import numpy as np

from ..cuts import HoffmanCut, max_period_mass
from ..apm import profile_norm
from ..niapm import NiapmConfig
from ..polytope import aggregate
from ..smc import OPERATOR, audit_privacy
from .instances import InstanceSpec

RUN_SCHEMA = "disagg.run/1"
CUT_TOL = 1e-6
ROW_TOL = 1e-9


def package_version():
    from importlib.metadata import PackageNotFoundError, version
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def config_to_dict(cfg: NiapmConfig):
    return dict(cfg.__dict__)


def config_from_dict(d):
    return NiapmConfig(**d)


def build_run_record(spec: InstanceSpec, cfg: NiapmConfig, outcome, *, master_backend="highs",
                     timing=False, profiles=True):
    """One JSON-ready dict per run. Wall time is left out unless ``timing`` is set,
    so that repeated runs produce identical bytes."""
    sol, m = outcome.solution, outcome.metrics
    rec = {
        "schema": RUN_SCHEMA,
        "version": package_version(),
        "spec_digest": spec.digest(),
        "instance": spec.to_dict(),
        "config": config_to_dict(cfg),
        "master_backend": master_backend,
        "solution": {
            "status": sol.status,
            "objective": sol.objective,
            "p": sol.p.tolist(),
            "schedule": sol.schedule,
        },
        "metrics": {
            "n_master_problems": m.n_master_problems,
            "n_projections": m.n_projections,
            "n_cuts": m.n_cuts,
            "objective": m.objective,
            "gap": outcome.gap,
        },
        "cuts": [c.to_dict() for c in m.cuts],
        "trace": [s.to_dict() for s in m.steps],
    }
    if profiles:
        rec["profiles"] = outcome.profiles.tolist()
    if outcome.ledger is not None:
        rec["privacy"] = {
            "operator_received": {f"{k}/{t}": c for (k, t), c in
                                  sorted(outcome.ledger.count_received(OPERATOR).items())},
            "operator_audit_passed": audit_privacy(outcome.ledger, OPERATOR).passed,
        }
    if timing:
        rec["metrics"]["wall_time"] = m.wall_time
    return rec


def dumps_record(rec):
    return json.dumps(rec, sort_keys=True, indent=1) + "\n"


@dataclass
class AuditReport:
    checks: List[tuple] = field(default_factory=list)  # (name, passed, detail)

    def add(self, name, passed, detail=""):
        self.checks.append((name, bool(passed), detail))

    @property
    def passed(self):
        return all(ok for _, ok, _ in self.checks)

    def lines(self):
        return [f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip()
                for name, ok, detail in self.checks]


def audit_record(rec, *, resolve=True):
    """Re-check a stored run against its embedded instance.

    With ``resolve`` the final master problem is rebuilt from the stored cuts
    and solved again to confirm the stored allocation is optimal for it.
    """
    from ..master import Aggregates, build_microgrid_milp, solve_milp

    rep = AuditReport()
    if rec.get("schema") != RUN_SCHEMA:
        rep.add("schema", False, f"unexpected {rec.get('schema')!r}")
        return rep
    spec = InstanceSpec.from_dict(rec["instance"])
    cfg = config_from_dict(rec["config"])
    agents = spec.agents
    rep.add("spec digest", spec.digest() == rec["spec_digest"])

    p = np.asarray(rec["solution"]["p"], dtype=float)
    if "profiles" in rec:
        x = np.asarray(rec["profiles"], dtype=float)
        rep.add("profiles in X_n", agents.contains(x, tol=ROW_TOL),
                f"(row tolerance {ROW_TOL:g})")
        gap = profile_norm(np.broadcast_to(p - aggregate(x), x.shape) / x.shape[0], cfg.norm)
        rep.add("disaggregation gap", gap <= cfg.eps_dis, f"{gap:.3e} <= {cfg.eps_dis:g}")

    cuts = [HoffmanCut.from_dict(c) for c in rec["cuts"]]
    supports = [c.t0 for c in cuts]
    rep.add("distinct cut supports", len(set(supports)) == len(supports), f"{len(cuts)} cuts")
    worst = 0.0
    for c in cuts:
        bound, _ = max_period_mass(c.t0, agents)
        worst = max(worst, bound - c.a_t0)
    rep.add("cuts valid", worst <= CUT_TOL, f"max shortfall {worst:.3e}")
    trig = [s for s in rec["trace"] if s["kind"] == "cut"]
    rep.add("cuts violated when emitted", all(s["violation"] > 0 for s in trig))
    objs = [s["objective"] for s in rec["trace"]]
    rep.add("master objective non-decreasing",
            all(b >= a - 1e-7 * max(1.0, abs(a)) for a, b in zip(objs, objs[1:])))
    rep.add("one master solve per cut plus one",
            rec["metrics"]["n_master_problems"] == len(cuts) + 1)
    if "privacy" in rec:
        rep.add("operator saw sigma only", rec["privacy"]["operator_audit_passed"])

    if resolve:
        # the aggregates used by the master came through secret sharing; rebuild
        # them exactly and allow for that rounding in the objective comparison
        agg = Aggregates(float(agents.demand.sum()), agents.lower.sum(axis=0),
                         agents.upper.sum(axis=0))
        inst = build_microgrid_milp(spec.params, agg, cuts)
        sol = solve_milp(inst, backend=rec.get("master_backend", "highs"))
        ok = sol.optimal and abs(sol.objective - rec["solution"]["objective"]) <= 1e-6 * max(
            1.0, abs(sol.objective))
        rep.add("allocation optimal for final master", ok,
                f"{sol.objective!r} vs {rec['solution']['objective']!r}" if sol.optimal
                else sol.status)
    return rep

"""Random microgrid instances and their JSON form."""
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from ..master import MicrogridParams
from ..polytope import AgentSet

INSTANCE_SCHEMA = "disagg.instance/1"


def streams(seed):
    """Independent generators for instance data and for the secure-aggregation masks.

    Both come from ``numpy.random.SeedSequence(seed).spawn(2)`` (PCG64).
    """
    inst, smc = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(inst), int(smc.generate_state(1, np.uint64)[0] >> np.uint64(1))


@dataclass
class InstanceSpec:
    n_agents: int
    seed: int
    horizon: int
    kappa: float
    params: MicrogridParams
    agents: AgentSet
    smc_seed: int = 0

    def to_dict(self):
        return {
            "schema": INSTANCE_SCHEMA,
            "n_agents": self.n_agents,
            "seed": self.seed,
            "horizon": self.horizon,
            "kappa": self.kappa,
            "smc_seed": self.smc_seed,
            "params": self.params.to_dict(),
            "agents": {
                "demand": self.agents.demand.tolist(),
                "lower": self.agents.lower.tolist(),
                "upper": self.agents.upper.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema") != INSTANCE_SCHEMA:
            raise ValueError(f"unsupported instance schema {d.get('schema')!r}")
        a = d["agents"]
        return cls(
            n_agents=d["n_agents"],
            seed=d["seed"],
            horizon=d["horizon"],
            kappa=d["kappa"],
            params=MicrogridParams.from_dict(d["params"]),
            agents=AgentSet(a["demand"], a["lower"], a["upper"]),
            smc_seed=d.get("smc_seed", 0),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def digest(self):
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def pv_profile(rng, horizon, kappa):
    """PV output: [50 (1 - cos(2 pi (t - 6) / 16)) + U(0, 10)] * kappa for t in 6..20 (1-based)."""
    pv = np.zeros(horizon)
    for t in range(6, min(20, horizon) + 1):
        pv[t - 1] = (50.0 * (1.0 - np.cos((t - 6) * 2.0 * np.pi / 16.0))
                     + rng.uniform(0.0, 10.0)) * kappa
    return pv


def generate_instance(n_agents, seed, horizon=24):
    """Seeded microgrid instance with kappa = N / 20 scaling of the generator and PV."""
    if n_agents < 2:
        raise ValueError("need at least two agents")
    rng, smc_seed = streams(seed)
    kappa = n_agents / 20.0
    pv = pv_profile(rng, horizon, kappa)
    params = MicrogridParams(
        horizon=horizon,
        theta=np.array([0.0, 70.0, 100.0, 300.0]) * kappa,
        marginal_costs=np.array([0.2, 0.4, 0.5]),
        alpha1=4.0,
        start_cost=15.0,
        p_min=50.0 * kappa,
        p_max=300.0 * kappa,
        pv=pv,
    )
    lower = rng.uniform(0.0, 10.0, size=(n_agents, horizon))
    upper = lower + rng.uniform(0.0, 5.0, size=(n_agents, horizon))
    demand = rng.uniform(lower.sum(axis=1), upper.sum(axis=1))
    return InstanceSpec(n_agents, seed, horizon, kappa, params,
                        AgentSet(demand, lower, upper), smc_seed)

"""Random instances shaped like the R benchmark family.

The demand distribution of the original scenario files is not published;
demands here are i.i.d. uniform around a per-commodity base level. This is a
stand-in, not a reproduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import PROB_TOL, Arc, Commodity, Instance, Scenario
from .oracle import max_flow_value
from .subproblems import routable

MAX_DEMAND_DRAWS = 100


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    num_nodes: int
    num_arcs: int
    num_commodities: int
    num_scenarios: int
    capacity_ratio: float = 0.8
    seed: int = 0
    alpha: float = 0.1
    capacity_range: tuple[int, int] = (5, 30)
    demand_spread: float = 0.5


def generate_instance(spec: GeneratorSpec | None = None, **kwargs) -> Instance:
    """Draw an instance; a pure function of ``spec``.

    ``capacity_ratio`` is the mean demand of a commodity as a fraction of its
    share (1/K) of the max flow it could push alone through the fully built
    network. Demands are redrawn until the fully built network routes at
    least ``ceil((1 - alpha) S)`` scenarios.
    """
    if spec is None:
        spec = GeneratorSpec(**kwargs)
    elif kwargs:
        spec = replace(spec, **kwargs)
    n, m = spec.num_nodes, spec.num_arcs
    if n < 2:
        raise GeneratorError("need at least two nodes")
    if m < n:
        raise GeneratorError(f"{m} arcs cannot connect {n} nodes in a cycle")
    if m > n * (n - 1):
        raise GeneratorError(f"{m} arcs exceed the {n * (n - 1)} distinct ordered pairs")
    if spec.num_scenarios < 1 or spec.num_commodities < 1:
        raise GeneratorError("need at least one scenario and one commodity")

    rng = np.random.default_rng(spec.seed)

    # A Hamiltonian cycle keeps every origin-destination pair connected.
    order = rng.permutation(n)
    pairs = [(int(order[i]), int(order[(i + 1) % n])) for i in range(n)]
    used = set(pairs)
    rest = [(i, j) for i in range(n) for j in range(n) if i != j and (i, j) not in used]
    extra = rng.choice(len(rest), size=m - n, replace=False) if m > n else []
    pairs += [rest[int(e)] for e in extra]
    pairs.sort()

    lo, hi = spec.capacity_range
    caps = rng.integers(lo, hi + 1, size=m)
    costs = np.maximum(1, np.round(caps * rng.uniform(0.5, 2.0, size=m))).astype(int)
    arcs = tuple(Arc(a, t, h, float(caps[a]), float(costs[a])) for a, (t, h) in enumerate(pairs))

    ods = [(i, j) for i in range(n) for j in range(n) if i != j]
    picks = rng.choice(len(ods), size=spec.num_commodities, replace=spec.num_commodities > len(ods))
    commodities = tuple(Commodity(k, *ods[int(p)]) for k, p in enumerate(picks))

    S, K = spec.num_scenarios, spec.num_commodities
    probe = Instance(n, arcs, commodities, (), spec.alpha)
    ones = (1,) * m
    reach = np.array([max_flow_value(probe, ones, k) for k in range(K)])
    base = spec.capacity_ratio * reach / K
    need = math.ceil((1.0 - spec.alpha) * S - PROB_TOL)
    for _ in range(MAX_DEMAND_DRAWS):
        factors = rng.uniform(1.0 - spec.demand_spread, 1.0 + spec.demand_spread, size=(S, K))
        demand = np.round(base * factors, 2)
        scenarios = tuple(
            Scenario(s, 1.0 / S, tuple(float(d) for d in demand[s])) for s in range(S)
        )
        inst = replace(probe, scenarios=scenarios)
        if sum(routable(inst, ones, s) for s in range(S)) >= need:
            return inst
    raise GeneratorError(
        f"no demand draw in {MAX_DEMAND_DRAWS} attempts keeps {need} of {S} scenarios routable"
    )


R_SHAPES = {
    "R04": (10, 60, 10),
    "R05": (10, 60, 25),
    "R06": (10, 60, 50),
    "R07": (10, 82, 10),
    "R08": (10, 83, 25),
    "R09": (10, 83, 50),
    "R10": (20, 120, 40),
}


def r_shape(group: str, num_scenarios: int, **kwargs) -> GeneratorSpec:
    """Spec with the node/arc/commodity counts of an R benchmark group."""
    n, m, k = R_SHAPES[group.upper()]
    return GeneratorSpec(num_nodes=n, num_arcs=m, num_commodities=k, num_scenarios=num_scenarios, **kwargs)

"""Problem data for chance-constrained network design instances."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np

PROB_TOL = 1e-9


class InstanceFormatError(ValueError):
    """The instance document is malformed (bad JSON, keys, or shapes)."""


@dataclass(frozen=True)
class Arc:
    id: int
    tail: int
    head: int
    capacity: float
    fixed_cost: float


@dataclass(frozen=True)
class Commodity:
    id: int
    origin: int
    destination: int


@dataclass(frozen=True)
class Scenario:
    id: int
    probability: float
    demand: tuple[float, ...]


@dataclass(frozen=True)
class Instance:
    """A directed graph with arc data, commodities, demand scenarios and a risk level.

    Array views of the data are computed on first access and cached; the
    instance itself is immutable.
    """

    num_nodes: int
    arcs: tuple[Arc, ...]
    commodities: tuple[Commodity, ...]
    scenarios: tuple[Scenario, ...]
    alpha: float

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    @property
    def num_commodities(self) -> int:
        return len(self.commodities)

    @property
    def num_scenarios(self) -> int:
        return len(self.scenarios)

    @cached_property
    def tails(self) -> np.ndarray:
        return np.array([a.tail for a in self.arcs], dtype=int)

    @cached_property
    def heads(self) -> np.ndarray:
        return np.array([a.head for a in self.arcs], dtype=int)

    @cached_property
    def capacities(self) -> np.ndarray:
        return np.array([a.capacity for a in self.arcs], dtype=float)

    @cached_property
    def fixed_costs(self) -> np.ndarray:
        return np.array([a.fixed_cost for a in self.arcs], dtype=float)

    @cached_property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios], dtype=float)

    @cached_property
    def demands(self) -> np.ndarray:
        """Scenario-by-commodity demand matrix."""
        return np.array([s.demand for s in self.scenarios], dtype=float).reshape(
            self.num_scenarios, self.num_commodities
        )

    @cached_property
    def admissible(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(_admissible(self, c)) for c in self.commodities)

    @property
    def equiprobable(self) -> bool:
        p = self.probabilities
        return bool(np.all(np.abs(p - 1.0 / len(p)) <= PROB_TOL))

    def cost(self, y) -> float:
        return float(self.fixed_costs @ np.asarray(y, dtype=float))


@dataclass(frozen=True)
class DesignVector:
    y: tuple[int, ...]
    z: tuple[int, ...]

    def respects_chance_constraint(self, instance: Instance) -> bool:
        mass = sum(p for p, zs in zip(instance.probabilities, self.z) if zs)
        return mass <= instance.alpha + PROB_TOL


def _admissible(instance: Instance, commodity: Commodity):
    for arc in instance.arcs:
        if arc.head != commodity.origin and arc.tail != commodity.destination:
            yield arc.id


def admissible_arcs(instance: Instance, k: int) -> list[int]:
    """Arcs usable by commodity ``k``: none enters its origin or leaves its destination."""
    if not 0 <= k < instance.num_commodities:
        raise IndexError(f"unknown commodity {k}")
    return list(instance.admissible[k])


def has_admissible_path(instance: Instance, k: int) -> bool:
    """Whether the fully built network has an origin-destination path within A^k."""
    com = instance.commodities[k]
    adj: dict[int, list[int]] = {}
    for a in instance.admissible[k]:
        arc = instance.arcs[a]
        adj.setdefault(arc.tail, []).append(arc.head)
    seen = {com.origin}
    stack = [com.origin]
    while stack:
        i = stack.pop()
        for j in adj.get(i, ()):
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return com.destination in seen


def validate(instance: Instance) -> list[str]:
    """Return every invariant violation of ``instance``; an empty list means valid."""
    out: list[str] = []
    n = instance.num_nodes
    if n < 1:
        out.append(f"instance has {n} nodes")
    if not 0.0 <= instance.alpha <= 1.0:
        out.append(f"alpha {instance.alpha} outside [0, 1]")

    for idx, arc in enumerate(instance.arcs):
        if arc.id != idx:
            out.append(f"arc at position {idx} has id {arc.id}")
        if not (0 <= arc.tail < n and 0 <= arc.head < n):
            out.append(f"arc {arc.id} endpoint outside 0..{n - 1}")
        if arc.tail == arc.head:
            out.append(f"self-loop on arc {arc.id}")
        if not arc.capacity >= 0:
            out.append(f"negative capacity on arc {arc.id}")
        if not arc.fixed_cost >= 0:
            out.append(f"negative fixed cost on arc {arc.id}")

    if not instance.commodities:
        out.append("instance has no commodities")
    for idx, com in enumerate(instance.commodities):
        if com.id != idx:
            out.append(f"commodity at position {idx} has id {com.id}")
        if not (0 <= com.origin < n and 0 <= com.destination < n):
            out.append(f"commodity {com.id} endpoint outside 0..{n - 1}")
        elif com.origin == com.destination:
            out.append(f"commodity {com.id} has origin equal to destination")

    if not instance.scenarios:
        out.append("instance has no scenarios")
    total = 0.0
    for idx, scen in enumerate(instance.scenarios):
        if scen.id != idx:
            out.append(f"scenario at position {idx} has id {scen.id}")
        if not 0.0 < scen.probability <= 1.0:
            out.append(f"scenario {scen.id} probability {scen.probability} outside (0, 1]")
        total += scen.probability
        if len(scen.demand) != instance.num_commodities:
            out.append(
                f"scenario {scen.id} has {len(scen.demand)} demands for {instance.num_commodities} commodities"
            )
        elif any(not d >= 0 for d in scen.demand):
            out.append(f"negative demand in scenario {scen.id}")
    if instance.scenarios and abs(total - 1.0) > PROB_TOL:
        out.append(f"probabilities sum to {total:.12g}")

    if not out:
        demands = instance.demands
        for k in range(instance.num_commodities):
            if demands[:, k].max(initial=0.0) > 0 and not has_admissible_path(instance, k):
                out.append(f"commodity {k} has positive demand but no admissible path")
    return out


def single_commodity(instance: Instance, k: int = 0) -> Instance:
    """Drop every commodity except ``k``."""
    com = instance.commodities[k]
    scenarios = tuple(replace(s, demand=(s.demand[k],)) for s in instance.scenarios)
    return replace(
        instance,
        commodities=(Commodity(0, com.origin, com.destination),),
        scenarios=scenarios,
    )


def with_alpha(instance: Instance, alpha: float) -> Instance:
    return replace(instance, alpha=float(alpha))


def diamond(demand: float = 6.0, alpha: float = 0.0) -> Instance:
    """Four-node diamond used throughout the docs and tests.

    Arcs 0->1 (u=5, f=5), 0->2 (u=4, f=4), 1->3 (u=3, f=3), 2->3 (u=4, f=4),
    one commodity 0->3 and a single scenario.
    """
    return build_instance(
        4,
        [(0, 1, 5, 5), (0, 2, 4, 4), (1, 3, 3, 3), (2, 3, 4, 4)],
        [(0, 3)],
        [(1.0, [demand])],
        alpha,
    )


def build_instance(num_nodes, arcs, commodities, scenarios, alpha) -> Instance:
    """Assemble an instance from plain tuples; ids are assigned densely."""
    return Instance(
        num_nodes=int(num_nodes),
        arcs=tuple(Arc(i, int(t), int(h), float(u), float(f)) for i, (t, h, u, f) in enumerate(arcs)),
        commodities=tuple(Commodity(i, int(o), int(d)) for i, (o, d) in enumerate(commodities)),
        scenarios=tuple(
            Scenario(i, float(p), tuple(float(x) for x in d)) for i, (p, d) in enumerate(scenarios)
        ),
        alpha=float(alpha),
    )


# -- JSON format -------------------------------------------------------------

_KEYS = ("nodes", "arcs", "commodities", "scenarios", "alpha")


def to_dict(instance: Instance) -> dict:
    return {
        "nodes": instance.num_nodes,
        "arcs": [[a.tail, a.head, a.capacity, a.fixed_cost] for a in instance.arcs],
        "commodities": [[c.origin, c.destination] for c in instance.commodities],
        "scenarios": [{"p": s.probability, "d": list(s.demand)} for s in instance.scenarios],
        "alpha": instance.alpha,
    }


def serialize(instance: Instance) -> str:
    return json.dumps(to_dict(instance), separators=(",", ":")) + "\n"


def _number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(f"{what} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise InstanceFormatError(f"{what} must be finite")
    return float(value)


def _integer(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceFormatError(f"{what} must be an integer, got {value!r}")
    return value


def from_dict(doc) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    unknown = sorted(set(doc) - set(_KEYS))
    if unknown:
        raise InstanceFormatError(f"unknown top-level keys: {', '.join(unknown)}")
    missing = [k for k in _KEYS if k not in doc]
    if missing:
        raise InstanceFormatError(f"missing keys: {', '.join(missing)}")

    nodes = _integer(doc["nodes"], "nodes")
    arcs = []
    for i, entry in enumerate(doc["arcs"]):
        if not isinstance(entry, list) or len(entry) != 4:
            raise InstanceFormatError(f"arc {i} must be [tail, head, capacity, fixed_cost]")
        t, h, u, f = entry
        arcs.append(Arc(i, _integer(t, f"arc {i} tail"), _integer(h, f"arc {i} head"),
                        _number(u, f"arc {i} capacity"), _number(f, f"arc {i} fixed cost")))
    commodities = []
    for i, entry in enumerate(doc["commodities"]):
        if not isinstance(entry, list) or len(entry) != 2:
            raise InstanceFormatError(f"commodity {i} must be [origin, destination]")
        commodities.append(Commodity(i, _integer(entry[0], f"commodity {i} origin"),
                                     _integer(entry[1], f"commodity {i} destination")))
    scenarios = []
    for i, entry in enumerate(doc["scenarios"]):
        if not isinstance(entry, dict) or set(entry) != {"p", "d"} or not isinstance(entry["d"], list):
            raise InstanceFormatError(f"scenario {i} must be an object {{p, d}}")
        demand = tuple(_number(x, f"scenario {i} demand") for x in entry["d"])
        scenarios.append(Scenario(i, _number(entry["p"], f"scenario {i} probability"), demand))
    return Instance(nodes, tuple(arcs), tuple(commodities), tuple(scenarios),
                    _number(doc["alpha"], "alpha"))


def parse(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"invalid JSON: {exc}") from None
    return from_dict(doc)


def load(path) -> Instance:
    return parse(Path(path).read_text(encoding="utf-8"))


def save(instance: Instance, path) -> None:
    Path(path).write_text(serialize(instance), encoding="utf-8")

"""Ground truth for checking the decomposition.

Three routes that avoid the subproblem and master code: the deterministic
equivalent MILP (extensive form, solved with the package's branch and bound),
cost-ordered enumeration of designs with max-flow or HiGHS feasibility checks,
and exhaustive enumeration of origin-destination cuts for one commodity.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import bnb, lp
from .model import PROB_TOL, Instance

FLOW_TOL = 1e-9
RATIO_TOL = 1e-9


@dataclass(frozen=True)
class OracleResult:
    status: str
    objective: float
    y: tuple[int, ...] | None
    z: tuple[int, ...] | None


@dataclass(frozen=True)
class CutRecord:
    cut_set: frozenset[int]
    capacity: float
    cardinality: int


@dataclass(frozen=True)
class CutEnumeration:
    demand: float
    records: tuple[CutRecord, ...]
    min_capacity: float
    min_sets: frozenset[frozenset[int]]
    snc_value: float
    snc_sets: frozenset[frozenset[int]]
    mis_value: float
    mis_sets: frozenset[frozenset[int]]

    @property
    def shortfall(self) -> float:
        return self.demand - self.min_capacity


# -- max flow --------------------------------------------------------------------

def max_flow_value(instance: Instance, y, k: int = 0) -> float:
    """Edmonds-Karp max flow of commodity ``k`` over built admissible arcs."""
    com = instance.commodities[k]
    src, dst = com.origin, com.destination
    head: list[int] = []
    cap: list[float] = []
    adj: dict[int, list[int]] = {}
    for a in instance.admissible[k]:
        if not y[a]:
            continue
        arc = instance.arcs[a]
        for u, v, c in ((arc.tail, arc.head, arc.capacity), (arc.head, arc.tail, 0.0)):
            adj.setdefault(u, []).append(len(head))
            head.append(v)
            cap.append(c)

    flow = 0.0
    while True:
        parent = {src: -1}
        queue = deque([src])
        while queue and dst not in parent:
            u = queue.popleft()
            for e in adj.get(u, ()):
                v = head[e]
                if v not in parent and cap[e] > FLOW_TOL:
                    parent[v] = e
                    queue.append(v)
        if dst not in parent:
            return flow
        push = math.inf
        v = dst
        while v != src:
            e = parent[v]
            push = min(push, cap[e])
            v = head[e ^ 1]
        v = dst
        while v != src:
            e = parent[v]
            cap[e] -= push
            cap[e ^ 1] += push
            v = head[e ^ 1]
        flow += push


def max_flow_feasible(instance: Instance, y, s: int, k: int = 0) -> bool:
    return max_flow_value(instance, y, k) >= instance.demands[s, k] - FLOW_TOL


def lp_feasible(instance: Instance, y, s: int) -> bool:
    """Multicommodity feasibility of ``y`` in scenario ``s`` via HiGHS."""
    K, A, N = instance.num_commodities, instance.num_arcs, instance.num_nodes
    cols = [(k, a) for k in range(K) for a in instance.admissible[k]]
    nv = len(cols)
    a_eq, a_ub, b_ub = [], [], []
    for k, com in enumerate(instance.commodities):
        for i in range(N):
            if i in (com.origin, com.destination):
                continue
            row = np.zeros(nv)
            for j, (kk, a) in enumerate(cols):
                if kk == k:
                    row[j] = (instance.arcs[a].head == i) - (instance.arcs[a].tail == i)
            a_eq.append(row)
    for a in range(A):
        row = np.zeros(nv)
        for j, (_, aa) in enumerate(cols):
            if aa == a:
                row[j] = 1.0
        a_ub.append(row)
        b_ub.append(instance.capacities[a] * y[a])
    for k, com in enumerate(instance.commodities):
        row = np.zeros(nv)
        for j, (kk, a) in enumerate(cols):
            if kk == k and instance.arcs[a].head == com.destination:
                row[j] = -1.0
        a_ub.append(row)
        b_ub.append(-instance.demands[s, k])
    if nv == 0:
        return bool(np.all(instance.demands[s] <= FLOW_TOL))
    res = linprog(
        np.zeros(nv),
        A_ub=np.array(a_ub), b_ub=np.array(b_ub),
        A_eq=np.array(a_eq) if a_eq else None, b_eq=np.zeros(len(a_eq)) if a_eq else None,
        bounds=(0, None), method="highs",
    )
    if res.status not in (0, 2):
        raise RuntimeError(f"HiGHS feasibility check failed: {res.message}")
    return res.status == 0


def scenario_feasible(instance: Instance, y, s: int) -> bool:
    if instance.num_commodities == 1:
        return max_flow_feasible(instance, y, s, 0)
    return lp_feasible(instance, y, s)


def audit(instance: Instance, y) -> float:
    """Probability mass of scenarios that ``y`` cannot route."""
    return math.fsum(
        p for s, p in enumerate(instance.probabilities) if not scenario_feasible(instance, y, s)
    )


# -- cut enumeration ---------------------------------------------------------------

def enumerate_cuts(instance: Instance, y, s: int) -> CutEnumeration:
    """All (origin, destination) node partitions of a single-commodity instance."""
    if instance.num_commodities != 1:
        raise ValueError("cut enumeration needs a single-commodity instance")
    if instance.num_nodes > 20:
        raise ValueError("cut enumeration is limited to 20 nodes")
    com = instance.commodities[0]
    demand = float(instance.demands[s, 0])
    others = [i for i in range(instance.num_nodes) if i not in (com.origin, com.destination)]
    admissible = instance.admissible[0]

    seen: dict[frozenset[int], CutRecord] = {}
    for r in range(len(others) + 1):
        for extra in itertools.combinations(others, r):
            source_side = {com.origin, *extra}
            crossing = frozenset(
                a for a in admissible
                if instance.arcs[a].tail in source_side and instance.arcs[a].head not in source_side
            )
            if crossing not in seen:
                capacity = math.fsum(instance.arcs[a].capacity * y[a] for a in crossing)
                seen[crossing] = CutRecord(crossing, capacity, len(crossing))
    records = tuple(seen.values())

    def extremes(score):
        vals = [(score(rec), rec.cut_set) for rec in records]
        best = max(v for v, _ in vals)
        tol = RATIO_TOL * max(1.0, abs(best)) if math.isfinite(best) else 0.0
        return best, frozenset(c for v, c in vals if v >= best - tol)

    min_cap, min_sets = extremes(lambda rec: -rec.capacity)
    snc_value, snc_sets = extremes(lambda rec: (demand - rec.capacity) / (rec.cardinality + 1))

    def mis_score(rec):
        if rec.cardinality == 0:
            return math.inf if demand > rec.capacity else -math.inf
        return (demand - rec.capacity) / rec.cardinality

    mis_value, mis_sets = extremes(mis_score)
    return CutEnumeration(demand, records, -min_cap, min_sets, snc_value, snc_sets, mis_value, mis_sets)


# -- design enumeration -------------------------------------------------------------

def brute_force_design(instance: Instance, max_arcs: int = 20) -> OracleResult:
    """Cheapest design whose unroutable probability mass is at most alpha.

    Designs are scanned in order of cost. Feasibility is monotone in ``y``, so each
    answer is memoised as a known-feasible or known-infeasible arc set per scenario.
    """
    A, S = instance.num_arcs, instance.num_scenarios
    if A > max_arcs:
        raise ValueError(f"brute force over 2^{A} designs exceeds the 2^{max_arcs} guard")
    masks = np.arange(1 << A, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(A)) & 1
    costs = bits @ instance.fixed_costs
    order = np.lexsort((masks, bits.sum(axis=1), costs))

    feasible_sets: list[list[int]] = [[] for _ in range(S)]
    infeasible_sets: list[list[int]] = [[] for _ in range(S)]
    probs = instance.probabilities

    def feasible(mask: int, y, s: int) -> bool:
        if any(f & ~mask == 0 for f in feasible_sets[s]):
            return True
        if any(mask & ~i == 0 for i in infeasible_sets[s]):
            return False
        ok = scenario_feasible(instance, y, s)
        (feasible_sets if ok else infeasible_sets)[s].append(mask)
        return ok

    for idx in order:
        mask = int(masks[idx])
        y = tuple(int(b) for b in bits[idx])
        mass = 0.0
        z = []
        for s in range(S):
            if feasible(mask, y, s):
                z.append(0)
                continue
            z.append(1)
            mass += probs[s]
            if mass > instance.alpha + PROB_TOL:
                break
        else:
            return OracleResult("optimal", float(costs[idx]), y, tuple(z))
    return OracleResult("infeasible", math.inf, None, None)


# -- deterministic equivalent --------------------------------------------------------

def deq_model(instance: Instance) -> tuple[lp.LpModel, np.ndarray]:
    A, S = instance.num_arcs, instance.num_scenarios
    b = lp.LpBuilder()
    for a in range(A):
        b.add_var(instance.fixed_costs[a], 0.0, 1.0)
    for _ in range(S):
        b.add_var(0.0, 0.0, 1.0)
    for s in range(S):
        flow = [{a: b.add_var() for a in instance.admissible[k]} for k in range(instance.num_commodities)]
        for k, com in enumerate(instance.commodities):
            for i in range(instance.num_nodes):
                if i in (com.origin, com.destination):
                    continue
                b.add_row({v: (instance.arcs[a].head == i) - (instance.arcs[a].tail == i)
                           for a, v in flow[k].items()}, lp.EQ, 0.0)
        for a, arc in enumerate(instance.arcs):
            coefs = {f[a]: 1.0 for f in flow if a in f}
            coefs[a] = -arc.capacity
            b.add_row(coefs, lp.LE, 0.0)
        for k, com in enumerate(instance.commodities):
            d = float(instance.demands[s, k])
            coefs = {v: 1.0 for a, v in flow[k].items() if instance.arcs[a].head == com.destination}
            coefs[A + s] = d
            b.add_row(coefs, lp.GE, d)
    b.add_row({A + s: instance.probabilities[s] for s in range(S)}, lp.LE, instance.alpha)
    return b.build(), np.arange(A + S)


def solve_deq(instance: Instance, row_budget: int = 5000, time_limit: float = math.inf) -> OracleResult:
    """Exact optimum of the extensive form; every optimal answer is re-audited."""
    K, N, A, S = instance.num_commodities, instance.num_nodes, instance.num_arcs, instance.num_scenarios
    rows = S * (K * N + A + K) + 1
    if rows > row_budget:
        raise ValueError(f"extensive form needs about {rows} rows, budget is {row_budget}")
    model, binaries = deq_model(instance)
    res = bnb.solve_milp(model, binaries, time_limit=time_limit)
    if res.x is None:
        return OracleResult(res.status.value, math.inf, None, None)
    y = tuple(int(v) for v in np.round(res.x[:A]))
    z = tuple(int(v) for v in np.round(res.x[A:A + S]))
    objective = instance.cost(y)
    if res.status is bnb.BnbStatus.OPTIMAL and audit(instance, y) > instance.alpha + PROB_TOL:
        raise RuntimeError("extensive-form optimum fails the feasibility audit")
    return OracleResult(res.status.value, objective, y, z)

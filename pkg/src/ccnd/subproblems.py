"""Scenario feasibility subproblems and the feasibility cuts derived from them.

Each formulation relaxes the flow system (balance, shared capacity, demand)
with slack variables and minimises the total slack. The terminal LP duals
give ``(mu, pi, lambda)``; a positive optimum means the design cannot route
the scenario and yields the cut ``gamma * z_s >= gamma - beta^T y`` with
``gamma = sum_k d_k lambda_k`` and ``beta_ij = u_ij pi_ij``.
"""

from __future__ import annotations

import enum
import heapq
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from . import lp
from .model import Instance

logger = logging.getLogger("ccnd.cuts")

INFEASIBLE_TOL = 1e-6


class Formulation(enum.Enum):
    BB = "bb"
    FLOWMIS = "flowmis"
    MIS = "mis"
    SNC = "snc"

    @classmethod
    def parse(cls, value) -> Formulation:
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True, eq=False)
class DualSolution:
    mu: np.ndarray  # (commodity, node); origin entries are 0 and destination entries lambda
    pi: np.ndarray
    lam: np.ndarray
    objective: float


@dataclass(frozen=True)
class FeasibilityCut:
    """``big_m * z[scenario] >= gamma - beta @ y``."""

    scenario: int
    gamma: float
    beta: tuple[float, ...]
    big_m: float
    strengthened: bool = False

    def slack(self, y, z_s: float) -> float:
        """Left minus right side; negative means the cut is violated."""
        return self.big_m * z_s - (self.gamma - float(np.dot(self.beta, y)))

    def key(self) -> tuple:
        return (self.scenario, round(self.gamma, 9), tuple(round(b, 9) for b in self.beta))


@dataclass(frozen=True, eq=False)
class _Template:
    """Constraint matrix for one (instance, formulation); only the rhs varies."""

    model: lp.LpModel
    balance_rows: tuple[tuple[tuple[int, int], ...], ...]  # per commodity: (node, row)
    cap_row0: int
    dem_row0: int


def _build_template(instance: Instance, formulation: Formulation) -> _Template:
    K, A, N = instance.num_commodities, instance.num_arcs, instance.num_nodes
    b = lp.LpBuilder()
    flow: list[dict[int, int]] = []
    for k in range(K):
        flow.append({a: b.add_var(0.0) for a in instance.admissible[k]})

    balance_rows = []
    for k, com in enumerate(instance.commodities):
        rows = []
        for i in range(N):
            if i in (com.origin, com.destination):
                continue
            coefs: dict[int, float] = {}
            for a, var in flow[k].items():
                arc = instance.arcs[a]
                if arc.head == i:
                    coefs[var] = coefs.get(var, 0.0) + 1.0
                if arc.tail == i:
                    coefs[var] = coefs.get(var, 0.0) - 1.0
            rows.append((i, b.add_row(coefs, lp.EQ, 0.0)))
        balance_rows.append(tuple(rows))

    cap0 = b.num_rows
    for a in range(A):
        b.add_row({flow[k][a]: 1.0 for k in range(K) if a in flow[k]}, lp.LE, 0.0)
    dem0 = b.num_rows
    for k, com in enumerate(instance.commodities):
        coefs = {var: 1.0 for a, var in flow[k].items() if instance.arcs[a].head == com.destination}
        b.add_row(coefs, lp.GE, 0.0)

    model = b.build()
    cap_idx = np.arange(cap0, cap0 + A)
    dem_idx = np.arange(dem0, dem0 + K)

    # Slack columns: +1 in demand rows relaxes d - t, -1 in capacity rows relaxes u y + t.
    cols = []
    if formulation in (Formulation.FLOWMIS, Formulation.SNC, Formulation.MIS):
        col = np.zeros(model.num_rows)
        if formulation is not Formulation.MIS:
            col[dem_idx] = 1.0
        if formulation is not Formulation.FLOWMIS:
            col[cap_idx] = -1.0
        cols.append(col)
    else:
        for r in cap_idx:
            col = np.zeros(model.num_rows)
            col[r] = -1.0
            cols.append(col)
        for r in dem_idx:
            col = np.zeros(model.num_rows)
            col[r] = 1.0
            cols.append(col)
    slack = np.array(cols).T
    nslack = slack.shape[1]
    model = lp.LpModel(
        np.concatenate([np.zeros(model.num_vars), np.ones(nslack)]),
        np.hstack([model.matrix, slack]),
        model.senses,
        model.rhs,
        np.zeros(model.num_vars + nslack),
        np.full(model.num_vars + nslack, math.inf),
    )
    return _Template(model, tuple(balance_rows), cap0, dem0)


def _rhs(template: _Template, instance: Instance, y, s: int) -> np.ndarray:
    rhs = np.zeros(template.model.num_rows)
    A, K = instance.num_arcs, instance.num_commodities
    rhs[template.cap_row0:template.cap_row0 + A] = instance.capacities * np.asarray(y, dtype=float)
    rhs[template.dem_row0:template.dem_row0 + K] = instance.demands[s]
    return rhs


def _check_args(instance: Instance, y, s: int):
    if len(y) != instance.num_arcs:
        raise ValueError(f"design has {len(y)} entries for {instance.num_arcs} arcs")
    if not 0 <= s < instance.num_scenarios:
        raise IndexError(f"unknown scenario {s}")


def build_subproblem(instance: Instance, y, s: int, formulation) -> lp.LpModel:
    """Slack-relaxed feasibility LP of design ``y`` in scenario ``s``.

    Rows: balance (per commodity, per interior node), capacity (per arc),
    demand (per commodity). Its optimum is zero iff ``y`` routes scenario ``s``.
    """
    _check_args(instance, y, s)
    template = _build_template(instance, Formulation.parse(formulation))
    return template.model.with_rhs(_rhs(template, instance, y, s))


class BasisCache:
    """Per-instance store of subproblem templates and terminal bases.

    Bases are keyed by (scenario, formulation): consecutive checks of the same
    scenario differ only in capacity right-hand sides, so the previous basis
    stays dual feasible.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self.templates: dict[Formulation, _Template] = {}
        self.bases: dict[tuple[int, Formulation], lp.Basis] = {}
        self.lp_solves = 0
        self.pivots = 0

    def template(self, formulation: Formulation) -> _Template:
        if formulation not in self.templates:
            self.templates[formulation] = _build_template(self.instance, formulation)
        return self.templates[formulation]


def _extract_dual(template: _Template, instance: Instance, sol: lp.LpSolution) -> DualSolution:
    K, A, N = instance.num_commodities, instance.num_arcs, instance.num_nodes
    y = sol.dual
    pi = np.maximum(-y[template.cap_row0:template.cap_row0 + A], 0.0)
    lam = np.maximum(y[template.dem_row0:template.dem_row0 + K], 0.0)
    mu = np.zeros((K, N))
    for k, com in enumerate(instance.commodities):
        for i, row in template.balance_rows[k]:
            mu[k, i] = y[row]
        mu[k, com.destination] = lam[k]
    return DualSolution(mu=mu, pi=pi, lam=lam, objective=float(sol.objective))


def solve_subproblem(
    instance: Instance, y, s: int, formulation, basis_cache: BasisCache | None = None
) -> tuple[lp.LpSolution, DualSolution]:
    """Solve the slack LP and return the raw solution with its dual reading."""
    _check_args(instance, y, s)
    formulation = Formulation.parse(formulation)
    if basis_cache is None:
        basis_cache = BasisCache(instance)
    elif basis_cache.instance is not instance:
        raise ValueError("basis cache belongs to a different instance")
    template = basis_cache.template(formulation)
    model = template.model.with_rhs(_rhs(template, instance, y, s))
    sol = lp.solve(model, basis_cache.bases.get((s, formulation)))
    basis_cache.lp_solves += 1
    basis_cache.pivots += sol.iterations
    if sol.status is lp.LpStatus.ITERATION_LIMIT:
        raise lp.LpError(f"subproblem for scenario {s} hit the iteration limit")
    if not sol.optimal:
        raise lp.LpError(f"subproblem for scenario {s} ended {sol.status.value}")
    basis_cache.bases[(s, formulation)] = sol.basis
    return sol, _extract_dual(template, instance, sol)


def check_feasibility(
    instance: Instance, y, s: int, formulation, basis_cache: BasisCache | None = None
) -> DualSolution | None:
    """Return None if ``y`` routes scenario ``s``, else the subproblem duals."""
    _, dual = solve_subproblem(instance, y, s, formulation, basis_cache)
    if dual.objective <= INFEASIBLE_TOL:
        return None
    return dual


def derive_cut(dual: DualSolution, instance: Instance, s: int) -> FeasibilityCut:
    if dual.objective <= INFEASIBLE_TOL:
        raise ValueError(f"subproblem objective {dual.objective:.3g} does not certify infeasibility")
    gamma = float(instance.demands[s] @ dual.lam)
    beta = instance.capacities * dual.pi
    return FeasibilityCut(scenario=s, gamma=gamma, beta=tuple(float(b) for b in beta), big_m=gamma)


def shortest_path_length(instance: Instance, k: int, weights) -> float:
    """Dijkstra over the admissible arcs of commodity ``k``; inf when unreachable."""
    com = instance.commodities[k]
    adj: dict[int, list[tuple[int, float]]] = {}
    for a in instance.admissible[k]:
        arc = instance.arcs[a]
        adj.setdefault(arc.tail, []).append((arc.head, float(weights[a])))
    dist = {com.origin: 0.0}
    heap = [(0.0, com.origin)]
    done = set()
    while heap:
        du, u = heapq.heappop(heap)
        if u in done:
            continue
        if u == com.destination:
            return du
        done.add(u)
        for v, w in adj.get(u, ()):
            nd = du + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return math.inf


def strengthen_metric(cut: FeasibilityCut, dual: DualSolution, instance: Instance, s: int) -> FeasibilityCut:
    """Raise gamma to the metric bound from pi-weighted shortest paths.

    Any routing of scenario ``s`` pushes ``d_k`` units along paths of
    pi-length at least the shortest one, so ``beta^T y >= sum_k d_k L_k``.
    """
    demand = instance.demands[s]
    metric = 0.0
    for k in range(instance.num_commodities):
        if demand[k] == 0:
            continue
        length = shortest_path_length(instance, k, dual.pi)
        # Unreachable commodity: keep its original contribution.
        metric += demand[k] * (length if math.isfinite(length) else dual.lam[k])
    if metric <= cut.gamma:
        return cut
    return replace(cut, gamma=metric, big_m=metric, strengthened=True)


def log_cut(cut: FeasibilityCut, formulation: Formulation) -> None:
    if logger.isEnabledFor(logging.DEBUG):
        nnz = sum(1 for b in cut.beta if b > 0)
        logger.debug(
            "cut scenario=%d formulation=%s gamma=%.9g nnz=%d strengthened=%s",
            cut.scenario, formulation.value, cut.gamma, nnz, cut.strengthened,
        )


def sp_system(instance: Instance, y, s: int) -> lp.LpModel:
    """The unrelaxed flow system with a zero objective (used for auditing)."""
    b = lp.LpBuilder()
    flow = [{a: b.add_var() for a in instance.admissible[k]} for k in range(instance.num_commodities)]
    for k, com in enumerate(instance.commodities):
        for i in range(instance.num_nodes):
            if i in (com.origin, com.destination):
                continue
            coefs = {}
            for a, var in flow[k].items():
                arc = instance.arcs[a]
                coefs[var] = (arc.head == i) - (arc.tail == i)
            b.add_row(coefs, lp.EQ, 0.0)
    for a, arc in enumerate(instance.arcs):
        coefs = {f[a]: 1.0 for f in flow if a in f}
        b.add_row(coefs, lp.LE, arc.capacity * float(y[a]))
    for k, com in enumerate(instance.commodities):
        coefs = {var: 1.0 for a, var in flow[k].items() if instance.arcs[a].head == com.destination}
        b.add_row(coefs, lp.GE, float(instance.demands[s, k]))
    return b.build()


def routable(instance: Instance, y, s: int) -> bool:
    """Fresh cold LP feasibility check of the unrelaxed system."""
    sol = lp.solve(sp_system(instance, y, s))
    if sol.status is lp.LpStatus.ITERATION_LIMIT:
        raise lp.LpError("audit LP hit the iteration limit")
    return sol.optimal

"""Benders master problem and the two cut-loop strategies.

The master holds binary arc decisions ``y`` and scenario-skip decisions ``z``
under the knapsack row ``sum_s p_s z_s <= alpha``. Feasibility cuts
``gamma z_s + beta^T y >= gamma`` accumulate in a pool. With valid
inequalities enabled the master also routes one artificial scenario whose
demands are the marginal demands ``dbar_k``.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from . import bnb, lp
from .model import PROB_TOL, Instance
from .subproblems import (
    BasisCache,
    FeasibilityCut,
    Formulation,
    check_feasibility,
    derive_cut,
    log_cut,
    routable,
    strengthen_metric,
)

logger = logging.getLogger("ccnd.master")


class Strategy(enum.Enum):
    SINGLE_TREE = "tree"
    ITERATIVE = "iterative"

    @classmethod
    def parse(cls, value) -> Strategy:
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    TIME_LIMIT = "time_limit"
    NODE_LIMIT = "node_limit"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolveOptions:
    formulation: Formulation = Formulation.FLOWMIS
    use_vis: bool = False
    use_metric: bool = False
    strategy: Strategy = Strategy.SINGLE_TREE
    time_limit: float = 60.0
    node_limit: int | None = None
    seed: int = 0
    #: Called with (y, s, verdict) for every scenario subproblem solved.
    on_probe: Callable[[tuple[int, ...], int, bool], None] | None = None

    def __post_init__(self):
        object.__setattr__(self, "formulation", Formulation.parse(self.formulation))
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")


@dataclass
class SolveStats:
    iterations: int = 0
    cuts_added: int = 0
    bnb_nodes: int = 0
    lp_solves: int = 0
    wall_time: float = 0.0
    #: Master optimum of each Iterative round.
    round_objectives: list[float] = field(default_factory=list)


@dataclass
class SolveResult:
    status: SolveStatus
    y: tuple[int, ...] | None
    z: tuple[int, ...] | None
    objective: float
    stats: SolveStats = field(default_factory=SolveStats)
    cuts: list[FeasibilityCut] = field(default_factory=list)
    infeasible_mass: float | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "objective": None if self.y is None else self.objective,
            "y": None if self.y is None else list(self.y),
            "z": None if self.z is None else list(self.z),
            "stats": {
                "iterations": self.stats.iterations,
                "cuts_added": self.stats.cuts_added,
                "bnb_nodes": self.stats.bnb_nodes,
                "lp_solves": self.stats.lp_solves,
                "wall_time": self.stats.wall_time,
            },
        }


# -- marginal demand -----------------------------------------------------------

def _kept_value(demand: np.ndarray, probs: np.ndarray, kept: np.ndarray, equiprobable: bool) -> float:
    if equiprobable:
        return math.fsum(np.sort(demand[kept])) / len(demand)
    return math.fsum(demand[kept] * probs[kept])


def marginal_demand_closed_form(instance: Instance, k: int) -> float:
    """``(1/S) * sum`` of the ``ceil((1 - alpha) S)`` smallest demands; equal probabilities only."""
    if not instance.equiprobable:
        raise ValueError("closed form needs equiprobable scenarios")
    demand = instance.demands[:, k]
    S = len(demand)
    keep = math.ceil((1.0 - instance.alpha) * S - PROB_TOL)
    kept = np.zeros(S, dtype=bool)
    kept[np.argsort(demand, kind="stable")[:keep]] = True
    return _kept_value(demand, instance.probabilities, kept, True)


def marginal_demand_knapsack(instance: Instance, k: int) -> float:
    """Exact ``min_z sum_s d_s p_s (1 - z_s)`` s.t. ``sum_s p_s z_s <= alpha`` by branch and bound."""
    demand = instance.demands[:, k]
    p = instance.probabilities
    S = len(demand)
    model = lp.LpModel(-demand * p, p.reshape(1, S), [lp.LE], [instance.alpha + PROB_TOL],
                       np.zeros(S), np.ones(S))
    res = bnb.solve_milp(model, np.arange(S), gap=1e-12)
    if res.status is not bnb.BnbStatus.OPTIMAL:
        raise RuntimeError(f"marginal demand knapsack ended {res.status.value}")
    kept = np.round(res.x) == 0
    return _kept_value(demand, p, kept, instance.equiprobable)


def compute_marginal_demand(instance: Instance, k: int) -> float:
    if not 0 <= k < instance.num_commodities:
        raise IndexError(f"unknown commodity {k}")
    if instance.equiprobable:
        return marginal_demand_closed_form(instance, k)
    return marginal_demand_knapsack(instance, k)


# -- master model --------------------------------------------------------------

class MasterModel:
    """Relaxation data for the master MILP plus its feasibility-cut pool."""

    def __init__(self, instance: Instance, use_vis: bool = False):
        self.instance = instance
        self.use_vis = use_vis
        A, S = instance.num_arcs, instance.num_scenarios
        self.y_index = np.arange(A)
        self.z_index = np.arange(A, A + S)
        self.cut_pool: list[FeasibilityCut] = []
        self._cut_keys: set[tuple] = set()
        self.marginal_demand: np.ndarray | None = None
        self.vi_flow: list[dict[int, int]] | None = None

        b = lp.LpBuilder()
        for a in range(A):
            b.add_var(instance.fixed_costs[a], 0.0, 1.0)
        for _ in range(S):
            b.add_var(0.0, 0.0, 1.0)
        b.add_row({A + s: instance.probabilities[s] for s in range(S)}, lp.LE, instance.alpha)

        if use_vis:
            dbar = np.array([compute_marginal_demand(instance, k) for k in range(instance.num_commodities)])
            self.marginal_demand = dbar
            flow = [{a: b.add_var() for a in instance.admissible[k]} for k in range(instance.num_commodities)]
            self.vi_flow = flow
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
                coefs[a] = -arc.capacity
                b.add_row(coefs, lp.LE, 0.0)
            for k, com in enumerate(instance.commodities):
                coefs = {var: 1.0 for a, var in flow[k].items()
                         if instance.arcs[a].head == com.destination}
                b.add_row(coefs, lp.GE, dbar[k])
        self.base = b.build()
        self._rows: list[np.ndarray] = []
        self._rhs: list[float] = []

    @property
    def binaries(self) -> np.ndarray:
        return np.concatenate([self.y_index, self.z_index])

    @property
    def num_vars(self) -> int:
        return self.base.num_vars

    def cut_row(self, cut: FeasibilityCut) -> bnb.Row:
        row = np.zeros(self.num_vars)
        row[self.y_index] = cut.beta
        row[self.z_index[cut.scenario]] = cut.big_m
        return row, lp.GE, cut.gamma

    def add_cut(self, cut: FeasibilityCut) -> bnb.Row | None:
        """Pool ``cut``; returns its row, or None for an exact duplicate."""
        if abs(cut.big_m - cut.gamma) > 1e-12:
            raise ValueError("pooled cuts must use big_m == gamma")
        key = cut.key()
        if key in self._cut_keys:
            return None
        self._cut_keys.add(key)
        self.cut_pool.append(cut)
        row = self.cut_row(cut)
        self._rows.append(row[0])
        self._rhs.append(row[2])
        return row

    def lp_model(self) -> lp.LpModel:
        if not self._rows:
            return self.base
        return self.base.with_rows(np.array(self._rows), [lp.GE] * len(self._rows), self._rhs)


def build_master(instance: Instance, options: SolveOptions | None = None) -> MasterModel:
    options = options or SolveOptions()
    return MasterModel(instance, use_vis=options.use_vis)


def branch_and_bound(model: MasterModel, incumbent_hook=None, **kwargs) -> bnb.BnbResult:
    """Branch and bound over the master's binaries with its current cut pool."""
    return bnb.solve_milp(model.lp_model(), model.binaries, incumbent_hook, **kwargs)


# -- cut separation ------------------------------------------------------------

class _Separator:
    def __init__(self, instance: Instance, master: MasterModel, options: SolveOptions, stats: SolveStats):
        self.instance = instance
        self.master = master
        self.options = options
        self.stats = stats
        self.cache = BasisCache(instance)

    def separate(self, y: tuple[int, ...], z: tuple[int, ...]) -> tuple[int, list[bnb.Row]]:
        """Check every scenario the master requires; return (#violated, new rows)."""
        violated = 0
        rows: list[bnb.Row] = []
        for s in range(self.instance.num_scenarios):
            if z[s]:
                continue
            dual = check_feasibility(self.instance, y, s, self.options.formulation, self.cache)
            if self.options.on_probe is not None:
                self.options.on_probe(y, s, dual is None)
            if dual is None:
                continue
            violated += 1
            cut = derive_cut(dual, self.instance, s)
            if self.options.use_metric:
                cut = strengthen_metric(cut, dual, self.instance, s)
            row = self.master.add_cut(cut)
            if row is not None:
                log_cut(cut, self.options.formulation)
                rows.append(row)
                self.stats.cuts_added += 1
        return violated, rows


def _split(master: MasterModel, x: np.ndarray) -> tuple[tuple[int, ...], tuple[int, ...]]:
    y = tuple(int(v) for v in np.round(x[master.y_index]))
    z = tuple(int(v) for v in np.round(x[master.z_index]))
    return y, z


def audit(instance: Instance, y) -> tuple[float, tuple[int, ...]]:
    """Infeasible probability mass of ``y`` by fresh LP solves, and the skip vector."""
    z = tuple(0 if routable(instance, y, s) else 1 for s in range(instance.num_scenarios))
    mass = math.fsum(p for p, zs in zip(instance.probabilities, z) if zs)
    return mass, z


def solve(instance: Instance, options: SolveOptions | None = None) -> SolveResult:
    """Solve the chance-constrained design problem by Benders decomposition."""
    options = options or SolveOptions()
    start = time.perf_counter()
    stats = SolveStats()
    master = build_master(instance, options)
    sep = _Separator(instance, master, options, stats)

    if options.strategy is Strategy.SINGLE_TREE:
        res = _single_tree(master, sep, options, stats, start)
    else:
        res = _iterative(master, sep, options, stats, start)

    stats.lp_solves += sep.cache.lp_solves
    stats.wall_time = time.perf_counter() - start
    if res.x is None:
        status = SolveStatus.INFEASIBLE if res.status is bnb.BnbStatus.INFEASIBLE else _limit(res.status)
        return SolveResult(status, None, None, math.inf, stats, list(master.cut_pool))

    y, z = _split(master, res.x)
    result = SolveResult(_limit(res.status), y, z, instance.cost(y), stats, list(master.cut_pool))
    if result.status is SolveStatus.OPTIMAL:
        mass, _ = audit(instance, y)
        result.infeasible_mass = mass
        if mass > instance.alpha + PROB_TOL:
            raise RuntimeError(f"audit failed: infeasible mass {mass} exceeds alpha {instance.alpha}")
    return result


def _limit(status: bnb.BnbStatus) -> SolveStatus:
    return {
        bnb.BnbStatus.OPTIMAL: SolveStatus.OPTIMAL,
        bnb.BnbStatus.INFEASIBLE: SolveStatus.INFEASIBLE,
        bnb.BnbStatus.TIME_LIMIT: SolveStatus.TIME_LIMIT,
        bnb.BnbStatus.NODE_LIMIT: SolveStatus.NODE_LIMIT,
    }[status]


def _single_tree(master, sep, options, stats, start) -> bnb.BnbResult:
    def hook(x):
        y, z = _split(master, x)
        stats.iterations += 1
        violated, rows = sep.separate(y, z)
        logger.info(
            "incumbent event %d: objective=%.6g violated=%d cuts=%d",
            stats.iterations, master.instance.cost(y), violated, len(rows),
        )
        return rows if violated else None

    remaining = options.time_limit - (time.perf_counter() - start)
    res = branch_and_bound(master, hook, time_limit=remaining, node_limit=options.node_limit)
    stats.bnb_nodes += res.nodes
    stats.lp_solves += res.lp_solves
    return res


def _iterative(master, sep, options, stats, start) -> bnb.BnbResult:
    basis = None
    while True:
        remaining = options.time_limit - (time.perf_counter() - start)
        res = branch_and_bound(master, None, time_limit=remaining,
                               node_limit=options.node_limit, root_basis=basis)
        stats.iterations += 1
        stats.bnb_nodes += res.nodes
        stats.lp_solves += res.lp_solves
        if res.x is None or res.status is not bnb.BnbStatus.OPTIMAL:
            return res
        stats.round_objectives.append(res.objective)
        basis = res.root_basis
        y, z = _split(master, res.x)
        violated, rows = sep.separate(y, z)
        logger.info("round %d: master objective=%.6g |S_r|=%d cuts=%d",
                    stats.iterations, res.objective, violated, len(rows))
        if not violated:
            return res
        if not rows:
            raise RuntimeError("cut loop stalled: every violated scenario produced a duplicate cut")

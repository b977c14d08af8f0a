"""LP-based branch and bound over binary variables.

Until a first incumbent exists the search dives depth first, trying the
up-branch before the down-branch; from then on it is best first on the parent
bound. Without the dive, large design masters can exhaust their time limit
exploring fractional nodes and never reach an integer leaf.

An optional incumbent hook sees every integer-feasible node solution. It
either accepts it (returns None) or vetoes it by returning a list of rows
that are added globally; the node is then re-solved under the new rows. A
veto that adds nothing splits the node on its unfixed binaries instead, so
the subtree is still searched exhaustively.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from . import lp

INT_TOL = 1e-6

Row = tuple[np.ndarray, int, float]
Hook = Callable[[np.ndarray], "Sequence[Row] | None"]


class BnbStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    TIME_LIMIT = "time_limit"
    NODE_LIMIT = "node_limit"


@dataclass
class BnbResult:
    status: BnbStatus
    x: np.ndarray | None
    objective: float
    bound: float
    nodes: int
    lp_solves: int
    rows_added: int
    root_basis: lp.Basis | None = None


@dataclass
class _Node:
    lower: np.ndarray
    upper: np.ndarray
    basis: lp.Basis | None
    depth: int


def solve_milp(
    model: lp.LpModel,
    binaries: Sequence[int],
    hook: Hook | None = None,
    *,
    time_limit: float = math.inf,
    node_limit: int | None = None,
    gap: float = 1e-6,
    root_basis: lp.Basis | None = None,
) -> BnbResult:
    """Minimise ``model`` with the ``binaries`` restricted to {0, 1}."""
    start = time.perf_counter()
    binaries = np.asarray(binaries, dtype=int)
    lower = model.lower.copy()
    upper = model.upper.copy()
    lower[binaries] = np.maximum(lower[binaries], 0.0)
    upper[binaries] = np.minimum(upper[binaries], 1.0)

    current = model
    counter = itertools.count()
    heap: list[tuple[float, int, _Node]] = []
    dive: list[tuple[float, int, _Node]] = [(-math.inf, next(counter), _Node(lower, upper, root_basis, 0))]

    best_x: np.ndarray | None = None
    best_obj = math.inf
    nodes = lp_solves = rows_added = 0
    first_basis: lp.Basis | None = None
    status = BnbStatus.OPTIMAL

    def cutoff() -> float:
        return best_obj - gap * max(1.0, abs(best_obj)) if best_x is not None else math.inf

    def push(item):
        if best_x is None:
            dive.append(item)
        else:
            heapq.heappush(heap, item)

    while heap or dive:
        if dive and best_x is not None:
            for item in dive:
                heapq.heappush(heap, item)
            dive.clear()
        bound, _, node = dive.pop() if dive else heapq.heappop(heap)
        if bound >= cutoff():
            continue
        if time.perf_counter() - start > time_limit:
            push((bound, next(counter), node))
            status = BnbStatus.TIME_LIMIT
            break
        if node_limit is not None and nodes >= node_limit:
            push((bound, next(counter), node))
            status = BnbStatus.NODE_LIMIT
            break
        nodes += 1

        while True:
            sol = lp.solve(current.with_bounds(node.lower, node.upper), node.basis)
            lp_solves += 1
            if sol.status is lp.LpStatus.ITERATION_LIMIT:
                raise lp.LpError("node relaxation hit the simplex iteration limit")
            if not sol.optimal:
                break
            node.basis = sol.basis
            if first_basis is None:
                first_basis = sol.basis
            if sol.objective >= cutoff():
                break
            x = sol.primal
            frac = np.abs(x[binaries] - np.round(x[binaries]))
            if frac.max(initial=0.0) > INT_TOL:
                # Most fractional binary, lowest index on ties.
                j = int(binaries[np.argmax(frac >= frac.max() - 1e-12)])
                _branch(push, counter, node, j, sol.objective)
                break
            x = x.copy()
            x[binaries] = np.round(x[binaries])
            rows = hook(x) if hook is not None else None
            if rows is None:
                best_x, best_obj = x, float(sol.objective)
                break
            if rows:
                mat = np.array([r[0] for r in rows], dtype=float)
                current = current.with_rows(mat, [r[1] for r in rows], [r[2] for r in rows])
                rows_added += len(rows)
                continue
            # Vetoed without new rows: enumerate the remaining free binaries.
            free = binaries[node.lower[binaries] < node.upper[binaries]]
            if free.size:
                _branch(push, counter, node, int(free[0]), sol.objective)
            break

    bound = min((b for b, _, _ in itertools.chain(heap, dive)), default=best_obj)
    if status is BnbStatus.OPTIMAL and best_x is None:
        status = BnbStatus.INFEASIBLE
    return BnbResult(
        status=status,
        x=best_x,
        objective=best_obj,
        bound=min(bound, best_obj),
        nodes=nodes,
        lp_solves=lp_solves,
        rows_added=rows_added,
        root_basis=first_basis,
    )


def _branch(push, counter, node: _Node, j: int, bound: float) -> None:
    # The up-branch goes last so a dive pops it first.
    for value in (0.0, 1.0):
        lo, hi = node.lower.copy(), node.upper.copy()
        lo[j] = hi[j] = value
        push((bound, next(counter), _Node(lo, hi, node.basis, node.depth + 1)))

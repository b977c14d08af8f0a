"""
Feasibility cuts on the diamond network
=======================================

Four nodes, four arcs, one commodity that must ship 6 units from node 0 to
node 3. Leaving arc 2->3 unbuilt caps the max flow at 3, so the design is
infeasible and each subproblem formulation returns its own cut.
"""

import numpy as np

from ccnd import model, oracle
from ccnd.master import SolveOptions, solve
from ccnd.subproblems import Formulation, derive_cut, solve_subproblem

inst = model.diamond(demand=6.0)
y = (1, 1, 1, 0)
print("max flow with arc 3 unbuilt:", oracle.max_flow_value(inst, y))

# Every origin-destination cut, with its capacity under y.
cuts = oracle.enumerate_cuts(inst, y, 0)
for rec in cuts.records:
    print(f"  cut {sorted(rec.cut_set)}  capacity {rec.capacity:g}  |C| = {rec.cardinality}")

# The slack optimum of each formulation matches one of the extremal cut values:
# FlowMIS the shortfall d - min cap, SNC and MIS the two ratio maxima.
expected = {Formulation.FLOWMIS: cuts.shortfall, Formulation.BB: cuts.shortfall,
            Formulation.SNC: cuts.snc_value, Formulation.MIS: cuts.mis_value}
for f in Formulation:
    _, dual = solve_subproblem(inst, y, 0, f)
    cut = derive_cut(dual, inst, 0)
    print(f"{f.value:8s} t* = {dual.objective:.3f} (oracle {expected[f]:.3f})  "
          f"cut: {cut.big_m:g} z + {np.round(cut.beta, 3).tolist()} . y >= {cut.gamma:g}")

# Removing any single arc drops the max flow below 6, so all arcs are needed.
result = solve(inst, SolveOptions(formulation="flowmis", use_vis=True))
print("optimal design", result.y, "cost", result.objective)
print("brute force agrees:", oracle.brute_force_design(inst).objective == result.objective)

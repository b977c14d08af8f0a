"""Chance-constrained multicommodity capacitated fixed-charge network design.

Benders decomposition with four feasibility-cut normalizations, optional
metric strengthening and scenario-creation valid inequalities, plus exact
oracles for checking it. Everything runs on a small dense simplex and
branch-and-bound implemented in :mod:`ccnd.lp` and :mod:`ccnd.bnb`.
"""

from .generator import GeneratorSpec, generate_instance
from .master import SolveOptions, SolveResult, SolveStatus, Strategy, solve
from .model import Arc, Commodity, Instance, Scenario, build_instance, load, parse, save, serialize, validate
from .oracle import brute_force_design, enumerate_cuts, max_flow_feasible, solve_deq
from .subproblems import FeasibilityCut, Formulation, derive_cut, solve_subproblem, strengthen_metric

__all__ = [
    "Arc", "Commodity", "FeasibilityCut", "Formulation", "GeneratorSpec", "Instance", "Scenario",
    "SolveOptions", "SolveResult", "SolveStatus", "Strategy", "brute_force_design", "build_instance",
    "derive_cut", "enumerate_cuts", "generate_instance", "load", "max_flow_feasible", "parse", "save",
    "serialize", "solve", "solve_deq", "solve_subproblem", "strengthen_metric", "validate",
]
__version__ = "0.1.0"

import itertools

import numpy as np
import pytest

from ccnd import model, oracle
from ccnd.generator import GeneratorSpec, generate_instance
from ccnd.master import (
    MasterModel,
    SolveOptions,
    SolveStatus,
    Strategy,
    audit,
    build_master,
    compute_marginal_demand,
    marginal_demand_closed_form,
    marginal_demand_knapsack,
    solve,
)
from ccnd.model import build_instance
from ccnd.subproblems import FeasibilityCut, Formulation

CONFIGS = list(itertools.product(Strategy, Formulation, (False, True), (False, True)))


def demand_instance(demands, alpha, probs=None):
    probs = probs or [1.0 / len(demands)] * len(demands)
    return build_instance(2, [(0, 1, 100, 1)], [(0, 1)], list(zip(probs, [[d] for d in demands])), alpha)


def test_marginal_demand_example():
    inst = demand_instance([3, 5, 7, 9], 0.25)
    assert marginal_demand_closed_form(inst, 0) == pytest.approx(3.75)
    assert marginal_demand_knapsack(inst, 0) == marginal_demand_closed_form(inst, 0)


def test_marginal_demand_extremes():
    assert compute_marginal_demand(demand_instance([3, 5, 7, 9], 0.0), 0) == pytest.approx(6.0)
    assert compute_marginal_demand(demand_instance([3, 5, 7, 9], 1.0), 0) == 0.0


def test_marginal_demand_unequal_probabilities():
    inst = demand_instance([10, 1, 4], 0.3, probs=[0.25, 0.5, 0.25])
    # Dropping scenario 0 (p = 0.25) is the best single removal.
    assert compute_marginal_demand(inst, 0) == pytest.approx(0.5 * 1 + 0.25 * 4)
    with pytest.raises(ValueError):
        marginal_demand_closed_form(inst, 0)
    with pytest.raises(IndexError):
        compute_marginal_demand(inst, 1)


def test_closed_form_equals_knapsack_exactly(rng):
    for _ in range(200):
        S = int(rng.integers(1, 9))
        demands = list(np.round(rng.uniform(0, 20, S), 2))
        alpha = float(rng.choice([0, 0.1, 0.25, 0.5, 1.0]))
        inst = demand_instance(demands, alpha)
        assert marginal_demand_closed_form(inst, 0) == marginal_demand_knapsack(inst, 0)


def test_master_counts(diamond):
    plain = build_master(diamond, SolveOptions(use_vis=False))
    assert len(plain.binaries) == 4 + 1 and plain.base.num_rows == 1
    assert plain.base.num_vars == 5
    vi = MasterModel(diamond, use_vis=True)
    assert vi.base.num_vars == 5 + 4
    # knapsack + 2 balance + 4 capacity + 1 demand
    assert vi.base.num_rows == 1 + 2 + 4 + 1
    assert vi.base.rhs[-1] == pytest.approx(6.0)


def test_master_vis_vacuous_at_alpha_one(diamond):
    vi = MasterModel(model.with_alpha(diamond, 1.0), use_vis=True)
    assert np.all(vi.marginal_demand == 0.0) and vi.base.rhs[-1] == 0.0


def test_add_cut_dedup_and_tight_m(diamond):
    m = MasterModel(diamond)
    cut = FeasibilityCut(0, 6.0, (0.0, 0.0, 3.0, 4.0), 6.0)
    assert m.add_cut(cut) is not None
    assert m.add_cut(cut) is None
    assert len(m.cut_pool) == 1 and m.lp_model().num_rows == 2
    with pytest.raises(ValueError):
        m.add_cut(FeasibilityCut(0, 6.0, (1.0, 0.0, 0.0, 0.0), 10.0))


@pytest.mark.parametrize("strategy, f, vis, metric", CONFIGS)
def test_diamond_all_configs(diamond, strategy, f, vis, metric):
    res = solve(diamond, SolveOptions(formulation=f, use_vis=vis, use_metric=metric, strategy=strategy))
    assert res.status is SolveStatus.OPTIMAL
    assert res.objective == 16.0 and res.y == (1, 1, 1, 1)
    assert res.objective == oracle.brute_force_design(diamond).objective


def test_alpha_one_builds_nothing(diamond):
    res = solve(model.with_alpha(diamond, 1.0))
    assert res.objective == 0.0 and res.y == (0, 0, 0, 0)
    assert res.z == (1,)


def test_result_json(diamond):
    doc = solve(diamond).to_dict()
    assert doc["status"] == "optimal" and doc["objective"] == 16.0
    assert set(doc["stats"]) == {"iterations", "cuts_added", "bnb_nodes", "lp_solves", "wall_time"}


def test_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(time_limit=0)
    assert SolveOptions(formulation="snc", strategy="iterative").strategy is Strategy.ITERATIVE


def random_instances(count, seed):
    rng = np.random.default_rng(seed)
    for i in range(count):
        n = int(rng.integers(3, 6))
        yield generate_instance(GeneratorSpec(
            n, int(rng.integers(n, min(10, n * (n - 1)) + 1)), int(rng.integers(1, 3)),
            int(rng.integers(1, 6)), capacity_ratio=float(rng.uniform(0.6, 1.1)),
            alpha=float(rng.choice([0.0, 0.2, 0.5])), seed=1000 + i))


def test_strategies_agree_and_rounds_monotone():
    for inst in random_instances(8, 1):
        truth = oracle.brute_force_design(inst).objective
        for f in Formulation:
            tree = solve(inst, SolveOptions(formulation=f))
            it = solve(inst, SolveOptions(formulation=f, strategy="iterative"))
            assert tree.objective == pytest.approx(truth) and it.objective == pytest.approx(truth)
            rounds = it.stats.round_objectives
            assert all(b >= a - 1e-9 for a, b in zip(rounds, rounds[1:]))
            assert it.stats.iterations == len(rounds)


def test_pooled_cuts_hold_at_skipped_scenarios(rng):
    for inst in random_instances(5, 2):
        res = solve(inst, SolveOptions(formulation="snc", use_metric=True))
        for cut in res.cuts:
            assert cut.big_m == cut.gamma and cut.gamma > 0
            for _ in range(50):
                y = rng.integers(0, 2, inst.num_arcs)
                assert cut.slack(y, 1) >= -1e-9


def test_audit_and_probe_hook(diamond):
    seen = []
    res = solve(diamond, SolveOptions(on_probe=lambda y, s, ok: seen.append((y, s, ok))))
    assert seen and all(oracle.max_flow_feasible(diamond, y, s) == ok for y, s, ok in seen)
    mass, z = audit(diamond, res.y)
    assert mass == 0.0 and z == (0,)
    assert audit(diamond, (1, 1, 1, 0))[0] == 1.0


def test_time_and_node_limits():
    inst = generate_instance(GeneratorSpec(6, 14, 3, 8, seed=5))
    res = solve(inst, SolveOptions(node_limit=1))
    assert res.status in (SolveStatus.NODE_LIMIT, SolveStatus.OPTIMAL)
    res = solve(inst, SolveOptions(time_limit=1e-9))
    assert res.status is SolveStatus.TIME_LIMIT
    assert res.y is None or res.objective == inst.cost(res.y)


def test_infeasible_instance():
    # Capacity 1 can never carry 5 units and alpha forbids skipping.
    inst = build_instance(2, [(0, 1, 1, 1)], [(0, 1)], [(1.0, [5.0])], 0.0)
    for strategy in Strategy:
        assert solve(inst, SolveOptions(strategy=strategy)).status is SolveStatus.INFEASIBLE

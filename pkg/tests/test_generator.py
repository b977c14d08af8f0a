import math

import pytest

from ccnd import model
from ccnd.generator import GeneratorError, GeneratorSpec, generate_instance, r_shape
from ccnd.subproblems import routable


def test_r04_shape():
    inst = generate_instance(r_shape("R04", 16))
    assert (inst.num_nodes, inst.num_arcs, inst.num_commodities, inst.num_scenarios) == (10, 60, 10, 16)
    assert model.validate(inst) == []
    assert inst.alpha == 0.1


def test_deterministic_bytes():
    spec = GeneratorSpec(6, 12, 3, 8, seed=7)
    assert model.serialize(generate_instance(spec)) == model.serialize(generate_instance(spec))
    assert model.serialize(generate_instance(spec)) != model.serialize(generate_instance(spec, seed=8))


def test_single_scenario_alpha_zero():
    inst = generate_instance(GeneratorSpec(4, 6, 1, 1, alpha=0.0, seed=3))
    assert inst.num_scenarios == 1 and inst.alpha == 0.0
    assert routable(inst, (1,) * inst.num_arcs, 0)


@pytest.mark.parametrize("seed", range(10))
def test_enough_scenarios_routable(seed):
    inst = generate_instance(GeneratorSpec(5, 9, 2, 8, alpha=0.25, seed=seed))
    ok = sum(routable(inst, (1,) * inst.num_arcs, s) for s in range(inst.num_scenarios))
    assert ok >= math.ceil(0.75 * 8)
    assert all(a.capacity == int(a.capacity) and a.fixed_cost == int(a.fixed_cost) for a in inst.arcs)
    assert len({(a.tail, a.head) for a in inst.arcs}) == inst.num_arcs


def test_bad_specs():
    with pytest.raises(GeneratorError):
        generate_instance(GeneratorSpec(5, 4, 1, 1))
    with pytest.raises(GeneratorError):
        generate_instance(GeneratorSpec(3, 7, 1, 1))
    with pytest.raises(GeneratorError):
        generate_instance(GeneratorSpec(3, 3, 1, 4, capacity_ratio=50.0, alpha=0.0))

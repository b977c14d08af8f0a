import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccnd import model
from ccnd.model import InstanceFormatError, build_instance


def two_scenarios(probs):
    return build_instance(2, [(0, 1, 5, 1)], [(0, 1)], [(p, [1.0]) for p in probs], 0.1)


def test_diamond_is_valid(diamond):
    assert model.validate(diamond) == []


def test_probabilities_must_sum_to_one():
    assert "probabilities sum to 0.9" in model.validate(two_scenarios([0.5, 0.4]))


def test_negative_capacity():
    inst = build_instance(2, [(0, 1, -1, 1)], [(0, 1)], [(1.0, [1.0])], 0.0)
    assert "negative capacity on arc 0" in model.validate(inst)


def test_other_violations():
    inst = build_instance(3, [(0, 0, 1, 1), (0, 5, 1, -2)], [(1, 1)], [(1.0, [-1.0])], 1.5)
    msgs = model.validate(inst)
    for fragment in ("alpha", "self-loop on arc 0", "arc 1 endpoint", "negative fixed cost on arc 1",
                     "origin equal to destination", "negative demand"):
        assert any(fragment in m for m in msgs), fragment


def test_unroutable_commodity_flagged():
    inst = build_instance(3, [(1, 0, 1, 1)], [(0, 1)], [(1.0, [2.0])], 0.0)
    assert model.validate(inst) == ["commodity 0 has positive demand but no admissible path"]


def test_admissible_arcs_diamond(diamond):
    assert model.admissible_arcs(diamond, 0) == [0, 1, 2, 3]


def test_admissible_excludes_arcs_into_origin_and_out_of_destination():
    inst = build_instance(4, [(0, 1, 1, 1), (1, 0, 1, 1), (1, 3, 1, 1), (3, 1, 1, 1)], [(0, 3)],
                          [(1.0, [1.0])], 0.0)
    assert model.admissible_arcs(inst, 0) == [0, 2]
    with pytest.raises(IndexError):
        model.admissible_arcs(inst, 1)


@st.composite
def instances(draw):
    n = draw(st.integers(2, 6))
    node = st.integers(0, n - 1)
    arcs = draw(st.lists(st.tuples(node, node, st.integers(0, 30), st.integers(0, 30)), max_size=10))
    arcs = [a for a in arcs if a[0] != a[1]]
    coms = draw(st.lists(st.tuples(node, node).filter(lambda od: od[0] != od[1]), min_size=1, max_size=3))
    s = draw(st.integers(1, 4))
    demand = st.floats(0, 50, allow_nan=False).map(lambda x: round(x, 3))
    scen = [(1.0 / s, draw(st.lists(demand, min_size=len(coms), max_size=len(coms)))) for _ in range(s)]
    alpha = draw(st.sampled_from([0.0, 0.1, 0.25, 1.0]))
    return build_instance(n, arcs, coms, scen, alpha)


@settings(max_examples=100, deadline=None)
@given(instances())
def test_admissible_property(inst):
    for k, com in enumerate(inst.commodities):
        got = set(model.admissible_arcs(inst, k))
        for arc in inst.arcs:
            assert (arc.id in got) == (arc.head != com.origin and arc.tail != com.destination)


@settings(max_examples=100, deadline=None)
@given(instances())
def test_round_trip(inst):
    again = model.parse(model.serialize(inst))
    assert again == inst
    assert model.serialize(again) == model.serialize(inst)


def test_json_layout(diamond):
    doc = json.loads(model.serialize(diamond))
    assert list(doc) == ["nodes", "arcs", "commodities", "scenarios", "alpha"]
    assert doc["arcs"][0] == [0, 1, 5.0, 5.0]
    assert doc["scenarios"] == [{"p": 1.0, "d": [6.0]}]


@pytest.mark.parametrize("text", [
    '{"nodes": 2, "arcs": [], "commodities": [], "scenarios": [], "alpha": 0, "extra": 1}',
    '{"nodes": 2, "arcs": [], "commodities": [], "scenarios": []}',
    '{"nodes": 2.5, "arcs": [], "commodities": [], "scenarios": [], "alpha": 0}',
    '{"nodes": 2, "arcs": [[0, 1, 3]], "commodities": [], "scenarios": [], "alpha": 0}',
    '{"nodes": 2, "arcs": [], "commodities": [], "scenarios": [{"p": 1}], "alpha": 0}',
    '[1, 2]',
    'not json',
])
def test_parser_rejects(text):
    with pytest.raises(InstanceFormatError):
        model.parse(text)


def test_save_load(tmp_path, diamond):
    path = tmp_path / "d.json"
    model.save(diamond, path)
    assert model.load(path) == diamond


def test_single_commodity_keeps_first():
    inst = build_instance(3, [(0, 1, 1, 1), (1, 2, 1, 1)], [(0, 2), (1, 2)],
                          [(0.5, [1.0, 2.0]), (0.5, [3.0, 4.0])], 0.1)
    one = model.single_commodity(inst)
    assert one.num_commodities == 1
    assert one.commodities[0].origin == 0
    assert [s.demand for s in one.scenarios] == [(1.0,), (3.0,)]
    assert one.arcs == inst.arcs and one.alpha == inst.alpha


def test_design_vector_chance_constraint():
    inst = two_scenarios([0.5, 0.5])
    assert model.DesignVector((1,), (1, 0)).respects_chance_constraint(model.with_alpha(inst, 0.5))
    assert not model.DesignVector((1,), (1, 0)).respects_chance_constraint(inst)


def test_cost(diamond):
    assert diamond.cost((1, 1, 1, 1)) == 16.0
    assert diamond.cost((0, 1, 0, 1)) == 8.0

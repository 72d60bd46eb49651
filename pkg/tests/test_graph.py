"""Structural queries, checked against brute-force reference implementations."""

from random import Random

import pytest

from planweave.graph import (
    CycleError,
    ancestors,
    boundary_of,
    crossing_edges,
    descendants,
    induced_subgraph,
    is_acyclic,
    is_contractible,
    reassemble,
    remainder,
    topo_order,
)
from planweave.model import (
    InboundLink,
    OutboundLink,
    Plan,
    PlanEdge,
    make_plan,
    selection_of,
)
from conftest import quick_plan
from oracle_impls import (
    contraction_is_acyclic,
    is_topo_order,
    random_dag_plan,
    reachable_from,
)


def _cyclic_plan() -> Plan:
    plan = quick_plan("1m 2c 3s; 1-2 2-3")
    back = PlanEdge(3, 1, "v3", "loop")
    return make_plan(plan.nodes.values(), (*plan.edges, back))


def test_topo_order_simple(diamond):
    assert topo_order(diamond) == (1, 2, 3, 4)


def test_topo_order_breaks_ties_by_ascending_id():
    plan = quick_plan("1m 5c 3s 7k; 5-7 3-7 1-7")
    assert topo_order(plan) == (1, 3, 5, 7)


def test_topo_order_raises_on_cycle():
    with pytest.raises(CycleError):
        topo_order(_cyclic_plan())
    assert not is_acyclic(_cyclic_plan())


def test_topo_order_random_plans_satisfy_edge_direction():
    rng = Random(101)
    for _ in range(200):
        plan = random_dag_plan(rng, max_nodes=8)
        order = topo_order(plan)
        assert is_topo_order(plan, order)
        assert topo_order(plan) == order


def test_descendants_and_ancestors_match_reachability():
    rng = Random(202)
    for _ in range(100):
        plan = random_dag_plan(rng, max_nodes=7)
        for node_id in plan.nodes:
            assert descendants(plan, node_id) == frozenset(reachable_from(plan, node_id))
        reversed_plan = make_plan(
            plan.nodes.values(),
            [PlanEdge(e.dest_node, e.src_node, e.src_output, e.dest_input) for e in plan.edges],
        )
        for node_id in plan.nodes:
            assert ancestors(plan, node_id) == frozenset(reachable_from(reversed_plan, node_id))


def test_descendants_excludes_start(diamond):
    assert descendants(diamond, 1) == frozenset({2, 3, 4})
    assert 4 not in descendants(diamond, 4)
    assert ancestors(diamond, 4) == frozenset({1, 2, 3})


def test_crossing_edges_have_exactly_one_endpoint_inside(diamond):
    sel = selection_of([2, 3])
    crossing = crossing_edges(diamond, sel)
    assert {(e.src_node, e.dest_node) for e in crossing} == {(1, 2), (1, 3), (2, 4), (3, 4)}
    for e in crossing:
        assert (e.src_node in sel.node_ids) != (e.dest_node in sel.node_ids)


def test_boundary_of_diamond_selection(diamond):
    boundary = boundary_of(diamond, selection_of([2, 3]))
    assert boundary.inbound == (
        InboundLink(1, "v1", "in1_2"),
        InboundLink(1, "v1", "in1_3"),
    )
    assert boundary.outbound == (
        OutboundLink("v2", 4, "in2_4"),
        OutboundLink("v3", 4, "in3_4"),
    )


def test_induced_subgraph_keeps_internal_edges_only():
    plan = quick_plan("1m 2c 3s 4k; 1-2 2-3 3-4 2-4")
    sub, boundary = induced_subgraph(plan, selection_of([2, 3]))
    assert sub.node_ids() == (2, 3)
    assert [(e.src_node, e.dest_node) for e in sub.edges] == [(2, 3)]
    assert boundary.inbound_variables() == ("in1_2",)
    assert boundary.outbound_variables() == ("v2", "v3")
    assert sub.next_id == plan.next_id


def test_induced_subgraph_rejects_unknown_ids(diamond):
    with pytest.raises(KeyError, match=r"\[9\]"):
        induced_subgraph(diamond, selection_of([2, 9]))
    with pytest.raises(KeyError):
        is_contractible(diamond, selection_of([9]))


def test_split_and_reassemble_round_trip_random_plans():
    rng = Random(303)
    for _ in range(150):
        plan = random_dag_plan(rng, max_nodes=8)
        ids = list(plan.nodes)
        chosen = rng.sample(ids, rng.randint(1, len(ids)))
        sel = selection_of(chosen)
        sub, _ = induced_subgraph(plan, sel)
        rest = remainder(plan, sel)
        crossing = crossing_edges(plan, sel)
        assert set(sub.node_ids()) | set(rest.node_ids()) == set(plan.nodes)
        assert len(sub.edges) + len(rest.edges) + len(crossing) == len(plan.edges)
        assert reassemble(sub, rest, crossing) == plan


def test_remainder_drops_selection_and_touching_edges(diamond):
    rest = remainder(diamond, selection_of([2]))
    assert rest.node_ids() == (1, 3, 4)
    assert {(e.src_node, e.dest_node) for e in rest.edges} == {(1, 3), (3, 4)}


def test_contractible_known_cases(diamond):
    # Siblings with a common parent and child contract cleanly.
    assert is_contractible(diamond, selection_of([2, 3]))
    # 1 -> 2 -> 4 re-enters {1, 4} after leaving through 2.
    assert not is_contractible(diamond, selection_of([1, 4]))
    assert is_contractible(diamond, selection_of([1, 2]))
    assert is_contractible(diamond, selection_of(diamond.nodes))
    assert is_contractible(diamond, selection_of([3]))


def test_contractible_matches_condensation_oracle():
    rng = Random(404)
    checked = 0
    for _ in range(200):
        plan = random_dag_plan(rng, max_nodes=7)
        ids = list(plan.nodes)
        sel = selection_of(rng.sample(ids, rng.randint(1, len(ids))))
        assert is_contractible(plan, sel) == contraction_is_acyclic(plan, sel)
        checked += 1
    assert checked == 200

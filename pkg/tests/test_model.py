"""Core value types: canonical construction, derived accessors, boundaries."""

import pytest

from planweave.model import (
    AgentKind,
    InboundLink,
    NodeStatus,
    OutboundLink,
    PlanEdge,
    PlanNode,
    VarBinding,
    empty_plan,
    make_boundary,
    make_plan,
    node_data_equal,
    reset_node,
    selection_of,
)
from conftest import quick_plan


def _node(node_id, agent=AgentKind.MATH, **kw):
    kw.setdefault("task", f"t{node_id}")
    kw.setdefault("outputs", (f"v{node_id}",))
    return PlanNode(id=node_id, agent=agent, **kw)


def test_make_plan_sorts_nodes_and_edges():
    edges = [
        PlanEdge(3, 5, "v3", "b"),
        PlanEdge(1, 5, "v1", "a"),
        PlanEdge(1, 3, "v1", "a"),
    ]
    plan = make_plan([_node(5), _node(1), _node(3)], edges)
    assert plan.node_ids() == (1, 3, 5)
    assert [e.sort_key() for e in plan.edges] == sorted(e.sort_key() for e in edges)


def test_make_plan_next_id_clamped_to_exceed_max_positive():
    plan = make_plan([_node(4)], next_id=2)
    assert plan.next_id == 5
    assert make_plan([_node(4)], next_id=9).next_id == 9
    assert make_plan([_node(4)]).next_id == 5
    assert make_plan([_node(-3)], next_id=None).next_id == 1


def test_make_plan_rejects_duplicate_ids():
    with pytest.raises(ValueError, match="duplicate node id 2"):
        make_plan([_node(2), _node(2, agent=AgentKind.CODE)])


def test_empty_plan():
    plan = empty_plan()
    assert plan.nodes == {} and plan.edges == () and plan.next_id == 1


def test_node_lookup_and_membership(chain3):
    assert chain3.node(2).agent is AgentKind.CODE
    assert chain3.has_node(3) and not chain3.has_node(9)
    with pytest.raises(KeyError, match="unknown node id 9"):
        chain3.node(9)


def test_prereq_derived_from_edges_distinct_sorted():
    plan = quick_plan("1m 2c 3m; 1-3 2-3")
    extra = PlanEdge(1, 3, "v1", "second_slot")
    plan = make_plan(plan.nodes.values(), (*plan.edges, extra))
    assert plan.prereq_of(3) == (1, 2)
    assert plan.prereq_of(1) == ()


def test_incoming_outgoing(diamond):
    assert {e.dest_node for e in diamond.outgoing(1)} == {2, 3}
    assert {e.src_node for e in diamond.incoming(4)} == {2, 3}


def test_source_sink_isolated_ids():
    plan = quick_plan("1m 2c 3s 4k; 1-2 2-3")
    assert plan.source_ids() == (1, 4)
    assert plan.sink_ids() == (3, 4)
    assert plan.isolated_ids() == (4,)


def test_unbound_input_names_skip_literal_bindings():
    node = _node(
        1,
        inputs=(VarBinding("a", "5"), VarBinding("b"), VarBinding("c", "")),
    )
    assert node.input_names() == ("a", "b", "c")
    assert node.unbound_input_names() == ("b", "c")


def test_node_data_equal_ignores_execution_state():
    node = _node(1)
    done = PlanNode(
        id=1,
        task=node.task,
        agent=node.agent,
        outputs=node.outputs,
        status=NodeStatus.SUCCEEDED,
    )
    assert node_data_equal(node, done)
    assert not node_data_equal(node, _node(1, task="other"))
    fresh = reset_node(done)
    assert fresh.status is NodeStatus.PENDING and fresh.trace is None


def test_selection_must_be_non_empty():
    assert selection_of([2, 1]).node_ids == frozenset({1, 2})
    with pytest.raises(ValueError):
        selection_of([])


def test_make_boundary_dedupes_and_sorts():
    inbound = [
        InboundLink(2, "v2", "b"),
        InboundLink(1, "v1", "a"),
        InboundLink(2, "v2", "b"),
    ]
    outbound = [
        OutboundLink("r", 9, "z"),
        OutboundLink("q", 7, "y"),
        OutboundLink("r", 9, "z"),
    ]
    boundary = make_boundary(inbound, outbound)
    assert boundary.inbound == (InboundLink(1, "v1", "a"), InboundLink(2, "v2", "b"))
    assert boundary.outbound == (OutboundLink("q", 7, "y"), OutboundLink("r", 9, "z"))
    assert boundary.inbound_variables() == ("a", "b")
    assert boundary.outbound_variables() == ("q", "r")


def test_boundary_variable_lists_dedupe():
    boundary = make_boundary(
        [InboundLink(1, "v1", "a"), InboundLink(2, "v2", "a")],
        [OutboundLink("r", 7, "x"), OutboundLink("r", 9, "y")],
    )
    assert boundary.inbound_variables() == ("a",)
    assert boundary.outbound_variables() == ("r",)


def test_quick_plan_builder_is_draft_shaped():
    plan = quick_plan("1m 2c; 1-2")
    assert plan.node(2).inputs == (VarBinding("in1_2"),)
    assert plan.edges == (PlanEdge(1, 2, "v1", "in1_2"),)

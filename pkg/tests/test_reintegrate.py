"""Subgraph reintegration: frozen and flexible boundary policies."""

from random import Random

import pytest

from planweave.graph import CycleError, induced_subgraph
from planweave.model import (
    AgentKind,
    PlanEdge,
    PlanNode,
    VarBinding,
    make_plan,
    selection_of,
)
from planweave.reintegrate import (
    FLEXIBLE,
    FROZEN,
    BoundaryMismatchError,
    MalformedRevisionError,
    reintegrate,
)
from planweave.validate import is_draft_valid
from conftest import quick_plan
from oracle_impls import random_draft_plan


def _rnode(node_id, inputs=(), outputs=(), task="revised work", agent=AgentKind.MATH):
    return PlanNode(
        id=node_id,
        task=task,
        agent=agent,
        inputs=tuple(VarBinding(v) if isinstance(v, str) else v for v in inputs),
        outputs=tuple(outputs),
    )


def _two_step_revision():
    """Fresh two-node subplan covering the diamond's {2, 3} boundary."""
    return make_plan(
        [
            _rnode(-1, inputs=("in1_2", "in1_3"), outputs=("mid",)),
            _rnode(-2, inputs=("mid",), outputs=("v2", "v3")),
        ],
        [PlanEdge(-1, -2, "mid", "mid")],
    )


SEL = selection_of([2, 3])


def test_frozen_auto_wire_replaces_selection(diamond):
    result = reintegrate(diamond, SEL, _two_step_revision(), FROZEN)
    plan = result.plan
    assert plan.node_ids() == (1, 4, 5, 6)
    assert result.id_map == {-1: 5, -2: 6}
    assert result.touched_external == ()
    assert plan.next_id == 7
    assert {(e.src_node, e.dest_node, e.src_output, e.dest_input) for e in plan.edges} == {
        (1, 5, "v1", "in1_2"),
        (1, 5, "v1", "in1_3"),
        (5, 6, "mid", "mid"),
        (6, 4, "v2", "in2_4"),
        (6, 4, "v3", "in3_4"),
    }
    assert is_draft_valid(plan)


def test_frozen_preserves_external_nodes_byte_for_byte(diamond):
    result = reintegrate(diamond, SEL, _two_step_revision(), FROZEN)
    assert result.plan.node(1) == diamond.node(1)
    assert result.plan.node(4) == diamond.node(4)


def test_retained_positive_ids_stay(diamond):
    revised = make_plan(
        [
            _rnode(2, inputs=("in1_2", "in1_3"), outputs=("joined",)),
            _rnode(-1, inputs=("joined",), outputs=("v2", "v3")),
        ],
        [PlanEdge(2, -1, "joined", "joined")],
    )
    result = reintegrate(diamond, SEL, revised, FROZEN)
    assert result.plan.node_ids() == (1, 2, 4, 5)
    assert result.id_map == {-1: 5}


def test_identity_revision_reproduces_plan_exactly():
    rng = Random(41)
    done = 0
    for _ in range(100):
        plan = random_draft_plan(rng, max_nodes=7)
        ids = list(plan.nodes)
        sel = selection_of(rng.sample(ids, rng.randint(1, len(ids))))
        revised, _ = induced_subgraph(plan, sel)
        result = reintegrate(plan, sel, revised, FROZEN)
        assert result.plan == plan
        assert result.id_map == {} and result.touched_external == ()
        done += 1
    assert done == 100


def test_empty_subplan_rejected(diamond):
    from planweave.model import empty_plan

    with pytest.raises(MalformedRevisionError) as err:
        reintegrate(diamond, SEL, empty_plan(), FROZEN)
    assert err.value.code == "empty-subplan"


def test_foreign_positive_id_rejected(diamond):
    revised = make_plan([_rnode(7, inputs=("in1_2", "in1_3"), outputs=("v2", "v3"))])
    with pytest.raises(MalformedRevisionError) as err:
        reintegrate(diamond, SEL, revised, FROZEN)
    assert err.value.code == "foreign-id"


def test_unknown_endpoint_rejected(diamond):
    dangling = make_plan(
        [_rnode(-1, inputs=("in1_2", "in1_3"), outputs=("v2", "v3"))],
        [PlanEdge(-1, 99, "v2", "slot")],
    )
    with pytest.raises(MalformedRevisionError) as err:
        reintegrate(diamond, SEL, dangling, FROZEN)
    assert err.value.code == "unknown-endpoint"


def test_draft_invalid_revision_rejected(diamond):
    broken = make_plan(
        [_rnode(-1, inputs=("in1_2", "in1_3"), outputs=("v2", "v2", "v3"))]
    )
    with pytest.raises(MalformedRevisionError) as err:
        reintegrate(diamond, SEL, broken, FROZEN)
    assert err.value.code == "draft-invalid"
    assert "output-duplicate" in err.value.detail


def test_frozen_flags_missing_inbound_extra_demand_missing_outbound(diamond):
    missing_in = make_plan([_rnode(-1, inputs=("in1_2",), outputs=("v2", "v3"))])
    with pytest.raises(BoundaryMismatchError) as err:
        reintegrate(diamond, SEL, missing_in, FROZEN)
    assert err.value.variables == ("in1_3",)

    extra = make_plan(
        [_rnode(-1, inputs=("in1_2", "in1_3", "surprise"), outputs=("v2", "v3"))]
    )
    with pytest.raises(BoundaryMismatchError) as err:
        reintegrate(diamond, SEL, extra, FROZEN)
    assert err.value.variables == ("surprise",)

    missing_out = make_plan([_rnode(-1, inputs=("in1_2", "in1_3"), outputs=("v2",))])
    with pytest.raises(BoundaryMismatchError) as err:
        reintegrate(diamond, SEL, missing_out, FROZEN)
    assert err.value.variables == ("v3",)


def test_frozen_failure_leaves_input_plan_untouched(diamond):
    snapshot = make_plan(diamond.nodes.values(), diamond.edges, next_id=diamond.next_id)
    bad = make_plan([_rnode(-1, inputs=("in1_2",), outputs=("v2", "v3"))])
    with pytest.raises(BoundaryMismatchError):
        reintegrate(diamond, SEL, bad, FROZEN)
    assert diamond == snapshot


def test_declared_crossing_frozen_requires_exact_boundary(diamond):
    node = _rnode(-1, inputs=("in1_2", "in1_3"), outputs=("v2", "v3"))
    full = make_plan(
        [node],
        [
            PlanEdge(1, -1, "v1", "in1_2"),
            PlanEdge(1, -1, "v1", "in1_3"),
            PlanEdge(-1, 4, "v2", "in2_4"),
            PlanEdge(-1, 4, "v3", "in3_4"),
        ],
    )
    result = reintegrate(diamond, SEL, full, FROZEN)
    assert result.plan.node_ids() == (1, 4, 5)

    partial = make_plan(
        [node],
        [
            PlanEdge(1, -1, "v1", "in1_2"),
            PlanEdge(1, -1, "v1", "in1_3"),
            PlanEdge(-1, 4, "v2", "in2_4"),
        ],
    )
    with pytest.raises(BoundaryMismatchError) as err:
        reintegrate(diamond, SEL, partial, FROZEN)
    assert "v3" in err.value.variables


def test_declared_crossing_variable_checks(diamond):
    node = _rnode(-1, inputs=("in1_2", "in1_3"), outputs=("v2", "v3"))
    wrong_src = make_plan([node], [PlanEdge(1, -1, "not_there", "in1_2")])
    with pytest.raises(MalformedRevisionError) as err:
        reintegrate(diamond, SEL, wrong_src, FROZEN)
    assert err.value.code == "unknown-variable"

    wrong_dest = make_plan([node], [PlanEdge(-1, 4, "v2", "not_there")])
    with pytest.raises(MalformedRevisionError) as err:
        reintegrate(diamond, SEL, wrong_dest, FROZEN)
    assert err.value.code == "unknown-variable"


def test_flexible_drops_unconsumed_inbound(diamond):
    revised = make_plan([_rnode(-1, inputs=("in1_2",), outputs=("v2", "v3"))])
    result = reintegrate(diamond, SEL, revised, FLEXIBLE)
    inbound = [e for e in result.plan.edges if e.dest_node == 5]
    assert [(e.src_node, e.dest_input) for e in inbound] == [(1, "in1_2")]


def test_flexible_leaves_extra_demands_unbound(diamond):
    revised = make_plan(
        [_rnode(-1, inputs=("in1_2", "in1_3", "wishlist"), outputs=("v2", "v3"))]
    )
    result = reintegrate(diamond, SEL, revised, FLEXIBLE)
    fed = {e.dest_input for e in result.plan.edges if e.dest_node == 5}
    assert fed == {"in1_2", "in1_3"}
    assert "wishlist" in result.plan.node(5).unbound_input_names()


def test_flexible_replaces_missing_outbound_by_consumer_name(diamond):
    # The replacement output is named exactly like the consumer's input slot.
    revised = make_plan(
        [_rnode(-1, inputs=("in1_2", "in1_3"), outputs=("v2", "in3_4"))]
    )
    result = reintegrate(diamond, SEL, revised, FLEXIBLE)
    assert result.touched_external == ()
    rerouted = [e for e in result.plan.edges if e.src_output == "in3_4"]
    assert [(e.src_node, e.dest_node, e.dest_input) for e in rerouted] == [(5, 4, "in3_4")]


def test_flexible_unique_candidate_renames_consumer_input(diamond):
    revised = make_plan(
        [_rnode(-1, inputs=("in1_2", "in1_3"), outputs=("v2", "fresh_name"))]
    )
    result = reintegrate(diamond, SEL, revised, FLEXIBLE)
    assert result.touched_external == (4,)
    consumer = result.plan.node(4)
    assert set(consumer.input_names()) == {"in2_4", "fresh_name"}
    rerouted = [e for e in result.plan.edges if e.src_output == "fresh_name"]
    assert [(e.src_node, e.dest_node, e.dest_input) for e in rerouted] == [
        (5, 4, "fresh_name")
    ]
    assert is_draft_valid(result.plan)


def test_flexible_ambiguous_replacement_still_fails(diamond):
    revised = make_plan(
        [_rnode(-1, inputs=("in1_2", "in1_3"), outputs=("v2", "cand_a", "cand_b"))]
    )
    with pytest.raises(BoundaryMismatchError) as err:
        reintegrate(diamond, SEL, revised, FLEXIBLE)
    assert err.value.variables == ("v3",)


def test_declared_crossing_cycle_detected(diamond):
    revised = make_plan(
        [_rnode(-1, inputs=("in1_2",), outputs=("v2",))],
        [
            PlanEdge(4, -1, "v4", "in1_2"),
            PlanEdge(-1, 4, "v2", "in2_4"),
        ],
    )
    with pytest.raises(CycleError):
        reintegrate(diamond, SEL, revised, FLEXIBLE)


def test_negative_ids_remapped_descending_from_fresh_start():
    plan = quick_plan("1m 2c 3s; 1-2 2-3")
    sel = selection_of([2])
    revised = make_plan(
        [
            _rnode(-5, inputs=("in1_2",), outputs=("step_a",)),
            _rnode(-2, inputs=("step_a",), outputs=("v2",)),
        ],
        [PlanEdge(-5, -2, "step_a", "step_a")],
    )
    result = reintegrate(plan, sel, revised, FROZEN)
    # -2 is the largest negative id, so it claims the first fresh slot.
    assert result.id_map == {-2: 4, -5: 5}
    assert result.plan.next_id == 6

"""Revision flows: status taxonomy, id normalization, and the auto merge and
split fallbacks."""

import pytest

from planweave.backends import (
    BackendError,
    CannedBackend,
    FaultInjectorBackend,
    OracleBackend,
)
from planweave.benchgen import BreakOpKind, FeedbackStyle, GenerationConfig, generate_dataset
from planweave.edits import NodeSpec, SplitMode
from planweave.execution import build_executors, execute_all
from planweave.metrics import stability
from planweave.model import (
    AgentKind,
    PlanEdge,
    PlanNode,
    VarBinding,
    make_plan,
    selection_of,
)
from planweave.reintegrate import FLEXIBLE, FROZEN
from planweave.revision import (
    CONDITION_SPECS,
    FeedbackScope,
    FeedbackText,
    RevisionCondition,
    RevisionOutcome,
    RevisionStatus,
    auto_merge,
    auto_split,
    generate,
    normalize_ids,
    revise_by_edit_sequence,
    revise_global,
    revise_targeted,
)
from planweave.validate import is_draft_valid
from planweave.backends import SplitSpec


def _edge_key(e):
    return (e.src_node, e.dest_node, e.src_output, e.dest_input)


def _same_structure(a, b):
    return a.nodes == b.nodes and sorted(a.edges, key=_edge_key) == sorted(
        b.edges, key=_edge_key
    )


def _item(golds, kind, seed=6):
    items = generate_dataset(golds, GenerationConfig(items_per_kind=1, seed=seed))
    return next(it for it in items if it.op_kind is kind)


def _tf_feedback(item):
    return FeedbackText(
        item.feedback_deictic, FeedbackScope.TARGETED, FeedbackStyle.DEICTIC
    )


def _gf_feedback(item):
    return FeedbackText(
        item.feedback_id_anchored, FeedbackScope.GLOBAL, FeedbackStyle.ID_ANCHORED
    )


class _MergeStub:
    name = "merge-stub"

    def __init__(self, spec):
        self.spec = spec

    def auto_merge(self, subplan, boundary):
        return self.spec


class _SplitStub:
    name = "split-stub"

    def __init__(self, spec):
        self.spec = spec

    def auto_split(self, node, boundary):
        return self.spec


class _FailingBackend:
    name = "failing"

    def generate(self, question):
        raise BackendError("backend-unreachable", "down")

    def auto_merge(self, subplan, boundary):
        raise BackendError("bad-response", "no spec")


# --- feedback and condition table ---------------------------------------------------


def test_feedback_text_rejects_deictic_node_ids():
    with pytest.raises(ValueError):
        FeedbackText(
            "Merge node 3 with its sibling",
            FeedbackScope.TARGETED,
            FeedbackStyle.DEICTIC,
        )
    ok = FeedbackText(
        "Merge the selected nodes", FeedbackScope.TARGETED, FeedbackStyle.DEICTIC
    )
    assert ok.text.startswith("Merge")
    anchored = FeedbackText(
        "Rewrite node 3", FeedbackScope.GLOBAL, FeedbackStyle.ID_ANCHORED
    )
    assert anchored.style is FeedbackStyle.ID_ANCHORED


def test_condition_table_covers_every_condition():
    assert set(CONDITION_SPECS) == set(RevisionCondition)
    tf = CONDITION_SPECS[RevisionCondition.TF]
    assert (tf.scope, tf.style, tf.policy) == (
        FeedbackScope.TARGETED, FeedbackStyle.DEICTIC, FROZEN,
    )
    assert CONDITION_SPECS[RevisionCondition.TF_B_P].policy == FLEXIBLE
    assert CONDITION_SPECS[RevisionCondition.TF_B_P].with_context
    assert CONDITION_SPECS[RevisionCondition.GF2DM].edit_sequence
    assert CONDITION_SPECS[RevisionCondition.GF2DM].style is FeedbackStyle.ID_ANCHORED
    assert CONDITION_SPECS[RevisionCondition.TF_MERGE].auto_op == "merge"
    assert CONDITION_SPECS[RevisionCondition.TF_SPLIT_B].auto_op == "split"


def test_outcome_invariant():
    with pytest.raises(ValueError):
        RevisionOutcome(status=RevisionStatus.INTEGRATED)
    with pytest.raises(ValueError):
        RevisionOutcome(
            status=RevisionStatus.BACKEND_ERROR, plan=OracleBackend().generate("q")
        )


# --- id normalization -----------------------------------------------------------


def test_normalize_ids_remaps_negatives_in_order():
    nodes = [
        PlanNode(id=1, task="keep", agent=AgentKind.MATH, outputs=("v1",)),
        PlanNode(
            id=-1,
            task="new a",
            agent=AgentKind.MATH,
            inputs=(VarBinding("v1", ""),),
            outputs=("a",),
        ),
        PlanNode(
            id=-2,
            task="new b",
            agent=AgentKind.MATH,
            inputs=(VarBinding("a", ""),),
            outputs=("b",),
        ),
    ]
    edges = [PlanEdge(1, -1, "v1", "v1"), PlanEdge(-1, -2, "a", "a")]
    plan = normalize_ids(make_plan(nodes, edges))
    assert sorted(plan.nodes) == [1, 2, 3]
    assert plan.node(2).task == "new a" and plan.node(3).task == "new b"
    assert PlanEdge(2, 3, "a", "a") in plan.edges
    assert plan.next_id == 4


def test_normalize_ids_without_negatives_is_identity(diamond):
    assert normalize_ids(diamond) is diamond


# --- generate and global revision ----------------------------------------------


def test_generate_screens_backend_output():
    out = generate("q", OracleBackend())
    assert out.status is RevisionStatus.INTEGRATED
    assert is_draft_valid(out.plan)

    assert generate("q", _FailingBackend()).status is RevisionStatus.BACKEND_ERROR

    cyclic = make_plan(
        [
            PlanNode(id=1, task="a", agent=AgentKind.MATH,
                     inputs=(VarBinding("y", ""),), outputs=("x",)),
            PlanNode(id=2, task="b", agent=AgentKind.MATH,
                     inputs=(VarBinding("x", ""),), outputs=("y",)),
        ],
        [PlanEdge(1, 2, "x", "x"), PlanEdge(2, 1, "y", "y")],
    )
    out = generate("q", CannedBackend(plan=cyclic))
    assert out.status is RevisionStatus.MALFORMED_OUTPUT
    assert "cycle-detected" in out.detail


def test_revise_global_restores_gold(golds):
    item = _item(golds, BreakOpKind.ADD_NODE)
    out = revise_global(item.p_initial, _gf_feedback(item), (), OracleBackend())
    assert out.status is RevisionStatus.INTEGRATED
    assert _same_structure(out.plan, item.p_gold)


def test_revise_global_guards_scope_and_wraps_parse_errors(golds):
    item = _item(golds, BreakOpKind.ADD_NODE)
    with pytest.raises(ValueError):
        revise_global(item.p_initial, _tf_feedback(item), (), OracleBackend())
    nonsense = FeedbackText(
        "Do something smarter.", FeedbackScope.GLOBAL, FeedbackStyle.ID_ANCHORED
    )
    out = revise_global(item.p_initial, nonsense, (), OracleBackend())
    assert out.status is RevisionStatus.BACKEND_ERROR


# --- targeted revision ------------------------------------------------------------


def test_revise_targeted_integrates_and_preserves_the_rest(golds):
    item = _item(golds, BreakOpKind.CHANGE_DESC)
    out = revise_targeted(
        item.p_initial, item.target_nodes, _tf_feedback(item), FROZEN, False,
        OracleBackend(),
    )
    assert out.status is RevisionStatus.INTEGRATED
    assert _same_structure(out.plan, item.p_gold)
    assert stability(item.p_initial, out.plan, item.target_nodes) == 1.0
    assert out.touched_external == ()


def test_revise_targeted_statuses(golds):
    item = _item(golds, BreakOpKind.CHANGE_DESC)
    feedback = _tf_feedback(item)

    violator = FaultInjectorBackend(
        inner=OracleBackend(), boundary_violation_rate=1.0, seed=0
    )
    out = revise_targeted(
        item.p_initial, item.target_nodes, feedback, FROZEN, False, violator
    )
    assert out.status is RevisionStatus.BOUNDARY_MISMATCH
    assert out.plan is None and out.detail.startswith("variables:")

    mangler = FaultInjectorBackend(inner=OracleBackend(), malformed_rate=1.0, seed=0)
    out = revise_targeted(
        item.p_initial, item.target_nodes, feedback, FROZEN, False, mangler
    )
    assert out.status is RevisionStatus.MALFORMED_OUTPUT

    with pytest.raises(ValueError):
        revise_targeted(
            item.p_initial, item.target_nodes, _gf_feedback(item), FROZEN, False,
            OracleBackend(),
        )


def test_revise_targeted_with_context_passes_full_plan(golds):
    item = _item(golds, BreakOpKind.CHANGE_DESC)

    captured = {}

    class _Spy(OracleBackend):
        def revise_subplan(self, subplan, boundary, feedback, context=None):
            captured["context"] = context
            return super().revise_subplan(subplan, boundary, feedback, context)

    revise_targeted(
        item.p_initial, item.target_nodes, _tf_feedback(item), FROZEN, True, _Spy()
    )
    assert captured["context"] == item.p_initial
    revise_targeted(
        item.p_initial, item.target_nodes, _tf_feedback(item), FROZEN, False, _Spy()
    )
    assert captured["context"] is None


# --- auto merge -------------------------------------------------------------------


def test_auto_merge_contracts_selection():
    plan = OracleBackend().generate("q")
    out = auto_merge(plan, selection_of({2, 3}), OracleBackend())
    assert out.status is RevisionStatus.INTEGRATED
    assert sorted(out.plan.nodes) == [1, 4, 5, 6]
    merged = out.plan.node(6)
    assert plan.node(2).task in merged.task and plan.node(3).task in merged.task
    assert is_draft_valid(out.plan)
    _, bundle = execute_all(out.plan, build_executors({}))
    assert bundle.values["final_value"] == pytest.approx(56.0)


def test_auto_merge_rejects_non_contractible_selection():
    plan = OracleBackend().generate("q")
    out = auto_merge(plan, selection_of({1, 4}), OracleBackend())
    assert out.status is RevisionStatus.INVALID_OP
    assert "not-contractible" in out.detail
    assert out.failed_step == 0


def test_auto_merge_backend_error():
    plan = OracleBackend().generate("q")
    out = auto_merge(plan, selection_of({2, 3}), _FailingBackend())
    assert out.status is RevisionStatus.BACKEND_ERROR


def test_auto_merge_flexible_fallback_rewires_consumers():
    plan = OracleBackend().generate("q")
    spec = NodeSpec(
        "combined work",
        AgentKind.MATH,
        (VarBinding("pair_sum", ""), VarBinding("pair_diff", ""),
         VarBinding("scale_factor", "3")),
        ("double_sum_x", "square_diff"),
    )
    frozen = auto_merge(plan, selection_of({2, 3}), _MergeStub(spec), FROZEN)
    assert frozen.status is RevisionStatus.INVALID_OP
    assert "interface-uncovered" in frozen.detail

    flexible = auto_merge(plan, selection_of({2, 3}), _MergeStub(spec), FLEXIBLE)
    assert flexible.status is RevisionStatus.INTEGRATED
    assert flexible.touched_external == (4,)
    consumer = flexible.plan.node(4)
    assert "double_sum_x" in consumer.input_names()
    assert is_draft_valid(flexible.plan)


# --- auto split -------------------------------------------------------------------


def test_auto_split_restores_broken_merge(golds):
    item = _item(golds, BreakOpKind.SPLIT_SEQ)
    (nid,) = item.target_nodes.node_ids
    out = auto_split(item.p_initial, nid, OracleBackend())
    assert out.status is RevisionStatus.INTEGRATED
    assert len(out.plan.nodes) == len(item.p_gold.nodes)
    par = _item(golds, BreakOpKind.SPLIT_PAR)
    (nid,) = par.target_nodes.node_ids
    assert auto_split(par.p_initial, nid, OracleBackend()).status is (
        RevisionStatus.INTEGRATED
    )


def test_auto_split_error_paths():
    plan = OracleBackend().generate("q")
    assert auto_split(plan, 99, OracleBackend()).status is RevisionStatus.INVALID_OP
    # A plain task has no recognizable two-part shape.
    out = auto_split(plan, 2, OracleBackend())
    assert out.status is RevisionStatus.BACKEND_ERROR
    assert "unsplittable" in out.detail


def test_auto_split_flexible_fallback():
    plan = OracleBackend().generate("q")
    spec = SplitSpec(
        first=NodeSpec(
            "stage one",
            AgentKind.MATH,
            (VarBinding("pair_sum", ""), VarBinding("scale_factor", "3")),
            ("mid",),
        ),
        second=NodeSpec(
            "stage two", AgentKind.MATH, (VarBinding("mid", ""),), ("double_sum_y",),
        ),
        mode=SplitMode.SEQUENTIAL,
    )
    frozen = auto_split(plan, 2, _SplitStub(spec), FROZEN)
    assert frozen.status is RevisionStatus.INVALID_OP

    flexible = auto_split(plan, 2, _SplitStub(spec), FLEXIBLE)
    assert flexible.status is RevisionStatus.INTEGRATED
    assert flexible.touched_external == (4,)
    assert "double_sum_y" in flexible.plan.node(4).input_names()
    parts = [i for i in flexible.plan.nodes if i not in plan.nodes]
    assert len(parts) == 2


# --- edit-sequence revision ---------------------------------------------------------


def test_edit_sequence_revision_applies_all_ops(golds):
    item = _item(golds, BreakOpKind.ADD_NODE)
    out = revise_by_edit_sequence(item.p_initial, _gf_feedback(item), OracleBackend())
    assert out.status is RevisionStatus.INTEGRATED
    assert _same_structure(out.plan, item.p_gold)
    assert len(out.audit) >= 3

    with pytest.raises(ValueError):
        revise_by_edit_sequence(
            item.p_initial,
            FeedbackText("x", FeedbackScope.GLOBAL, FeedbackStyle.DEICTIC),
            OracleBackend(),
        )


def test_edit_sequence_reports_corrupted_step(golds):
    item = _item(golds, BreakOpKind.ADD_NODE)
    injected = FaultInjectorBackend(inner=OracleBackend(), corrupt_step=1)
    out = revise_by_edit_sequence(item.p_initial, _gf_feedback(item), injected)
    assert out.status is RevisionStatus.INVALID_OP
    assert out.failed_step == 1
    assert out.plan is None

    single = _item(golds, BreakOpKind.CHANGE_DESC)
    head = FaultInjectorBackend(inner=OracleBackend(), corrupt_step=0)
    out = revise_by_edit_sequence(single.p_initial, _gf_feedback(single), head)
    assert out.status is RevisionStatus.INVALID_OP
    assert out.failed_step == 0

    unaffected = FaultInjectorBackend(inner=OracleBackend(), corrupt_step=1)
    out = revise_by_edit_sequence(single.p_initial, _gf_feedback(single), unaffected)
    assert out.status is RevisionStatus.INTEGRATED

"""Revision flows: global regeneration, targeted subgraph revision with
reintegration, automatic merge/split, and edit-sequence application.

Every flow takes a planner backend and returns a RevisionOutcome whose
status classifies the failure mode: boundary_mismatch counts interface
violations, malformed_output counts unusable drafts (cycles, bad ids,
draft-invalid plans), invalid_op counts rejected structural edits, and
backend_error covers transport or parsing trouble in the backend itself.
A plan is attached exactly when the status is integrated.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from . import graph
from .backends import BackendError, PlannerBackend, SplitSpec
from .benchgen import FeedbackParseError, FeedbackStyle, NODE_ID_TOKEN_RE
from .edits import (
    EditError,
    EditSequence,
    SequenceFailure,
    SplitMode,
    apply_sequence,
    merge_nodes,
    split_node,
)
from .model import (
    Plan,
    PlanEdge,
    PlanNode,
    SubgraphSelection,
    make_plan,
    selection_of,
)
from .reintegrate import (
    FLEXIBLE,
    FROZEN,
    BoundaryMismatchError,
    MalformedRevisionError,
    ReintegrationPolicy,
    reintegrate,
)
from .validate import ValidationLevel, validate_plan


class FeedbackScope(str, Enum):
    GLOBAL = "global"
    TARGETED = "targeted"


@dataclass(frozen=True)
class FeedbackText:
    text: str
    scope: FeedbackScope
    style: FeedbackStyle

    def __post_init__(self) -> None:
        if self.style is FeedbackStyle.DEICTIC and NODE_ID_TOKEN_RE.search(self.text):
            raise ValueError("deictic feedback must not reference node ids")


class RevisionCondition(str, Enum):
    GF = "gf"
    TF = "tf"
    TF_P = "tf_p"
    TF_B = "tf_b"
    TF_B_P = "tf_b_p"
    TF_MERGE = "tf_merge"
    TF_SPLIT = "tf_split"
    TF_MERGE_B = "tf_merge_b"
    TF_SPLIT_B = "tf_split_b"
    GF2DM = "gf2dm"


@dataclass(frozen=True)
class ConditionSpec:
    """How a condition drives the revision machinery."""

    condition: RevisionCondition
    scope: FeedbackScope
    style: FeedbackStyle
    policy: ReintegrationPolicy
    with_context: bool = False
    auto_op: str | None = None
    edit_sequence: bool = False


CONDITION_SPECS: dict[RevisionCondition, ConditionSpec] = {
    RevisionCondition.GF: ConditionSpec(
        RevisionCondition.GF, FeedbackScope.GLOBAL, FeedbackStyle.ID_ANCHORED, FROZEN
    ),
    RevisionCondition.TF: ConditionSpec(
        RevisionCondition.TF, FeedbackScope.TARGETED, FeedbackStyle.DEICTIC, FROZEN
    ),
    RevisionCondition.TF_P: ConditionSpec(
        RevisionCondition.TF_P,
        FeedbackScope.TARGETED,
        FeedbackStyle.DEICTIC,
        FROZEN,
        with_context=True,
    ),
    RevisionCondition.TF_B: ConditionSpec(
        RevisionCondition.TF_B, FeedbackScope.TARGETED, FeedbackStyle.DEICTIC, FLEXIBLE
    ),
    RevisionCondition.TF_B_P: ConditionSpec(
        RevisionCondition.TF_B_P,
        FeedbackScope.TARGETED,
        FeedbackStyle.DEICTIC,
        FLEXIBLE,
        with_context=True,
    ),
    RevisionCondition.TF_MERGE: ConditionSpec(
        RevisionCondition.TF_MERGE,
        FeedbackScope.TARGETED,
        FeedbackStyle.DEICTIC,
        FROZEN,
        auto_op="merge",
    ),
    RevisionCondition.TF_SPLIT: ConditionSpec(
        RevisionCondition.TF_SPLIT,
        FeedbackScope.TARGETED,
        FeedbackStyle.DEICTIC,
        FROZEN,
        auto_op="split",
    ),
    RevisionCondition.TF_MERGE_B: ConditionSpec(
        RevisionCondition.TF_MERGE_B,
        FeedbackScope.TARGETED,
        FeedbackStyle.DEICTIC,
        FLEXIBLE,
        auto_op="merge",
    ),
    RevisionCondition.TF_SPLIT_B: ConditionSpec(
        RevisionCondition.TF_SPLIT_B,
        FeedbackScope.TARGETED,
        FeedbackStyle.DEICTIC,
        FLEXIBLE,
        auto_op="split",
    ),
    RevisionCondition.GF2DM: ConditionSpec(
        RevisionCondition.GF2DM,
        FeedbackScope.GLOBAL,
        FeedbackStyle.ID_ANCHORED,
        FROZEN,
        edit_sequence=True,
    ),
}


class RevisionStatus(str, Enum):
    INTEGRATED = "integrated"
    BOUNDARY_MISMATCH = "boundary_mismatch"
    INVALID_OP = "invalid_op"
    BACKEND_ERROR = "backend_error"
    MALFORMED_OUTPUT = "malformed_output"


@dataclass(frozen=True)
class RevisionOutcome:
    status: RevisionStatus
    plan: Plan | None = None
    audit: EditSequence = ()
    failed_step: int | None = None
    detail: str | None = None
    touched_external: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if (self.plan is not None) != (self.status is RevisionStatus.INTEGRATED):
            raise ValueError("plan must be present exactly when integrated")


def _failure(status: RevisionStatus, detail: str, step: int | None = None) -> RevisionOutcome:
    return RevisionOutcome(status=status, detail=detail, failed_step=step)


def normalize_ids(plan: Plan) -> Plan:
    """Remap negative node ids to fresh positive ones, -1 first."""
    negatives = sorted((i for i in plan.nodes if i < 0), reverse=True)
    if not negatives:
        return plan
    positives = [i for i in plan.nodes if i > 0]
    cursor = max([plan.next_id] + [i + 1 for i in positives] + [1])
    mapping: dict[int, int] = {}
    for nid in negatives:
        mapping[nid] = cursor
        cursor += 1
    nodes = [
        n if n.id > 0 else PlanNode(
            id=mapping[n.id],
            task=n.task,
            agent=n.agent,
            inputs=n.inputs,
            outputs=n.outputs,
        )
        for n in plan.nodes.values()
    ]
    edges = [
        PlanEdge(
            mapping.get(e.src_node, e.src_node),
            mapping.get(e.dest_node, e.dest_node),
            e.src_output,
            e.dest_input,
        )
        for e in plan.edges
    ]
    return make_plan(nodes, edges, next_id=cursor)


def generate(question: str, backend: PlannerBackend) -> RevisionOutcome:
    """First plan for a question, screened like any other backend output."""
    try:
        draft = backend.generate(question)
    except BackendError as exc:
        return _failure(RevisionStatus.BACKEND_ERROR, str(exc))
    normalized = normalize_ids(draft)
    report = validate_plan(normalized, ValidationLevel.DRAFT)
    if not report.ok:
        return _failure(
            RevisionStatus.MALFORMED_OUTPUT, "; ".join(sorted(set(report.codes())))
        )
    return RevisionOutcome(status=RevisionStatus.INTEGRATED, plan=normalized)


def revise_global(
    plan: Plan,
    feedback: FeedbackText,
    history: Sequence[str],
    backend: PlannerBackend,
) -> RevisionOutcome:
    """Full regeneration; the draft replaces the plan without reintegration."""
    if feedback.scope is not FeedbackScope.GLOBAL:
        raise ValueError("revise_global needs global-scope feedback")
    try:
        draft = backend.revise_full(plan, feedback.text, tuple(history))
    except (BackendError, FeedbackParseError, SequenceFailure, EditError) as exc:
        return _failure(RevisionStatus.BACKEND_ERROR, str(exc))
    normalized = normalize_ids(draft)
    report = validate_plan(normalized, ValidationLevel.DRAFT)
    if not report.ok:
        return _failure(
            RevisionStatus.MALFORMED_OUTPUT, "; ".join(sorted(set(report.codes())))
        )
    return RevisionOutcome(status=RevisionStatus.INTEGRATED, plan=normalized)


def revise_targeted(
    plan: Plan,
    sel: SubgraphSelection,
    feedback: FeedbackText,
    policy: ReintegrationPolicy,
    with_context: bool,
    backend: PlannerBackend,
) -> RevisionOutcome:
    """Backend sees only the selected subplan and its boundary (plus the full
    plan when with_context); the result is spliced back via reintegrate."""
    if feedback.scope is not FeedbackScope.TARGETED:
        raise ValueError("revise_targeted needs targeted-scope feedback")
    subplan, boundary = graph.induced_subgraph(plan, sel)
    try:
        revised = backend.revise_subplan(
            subplan, boundary, feedback.text, context=plan if with_context else None
        )
    except (BackendError, FeedbackParseError) as exc:
        return _failure(RevisionStatus.BACKEND_ERROR, str(exc))
    return _integrate(plan, sel, revised, policy)


def _integrate(
    plan: Plan, sel: SubgraphSelection, revised: Plan, policy: ReintegrationPolicy
) -> RevisionOutcome:
    try:
        result = reintegrate(plan, sel, revised, policy)
    except BoundaryMismatchError as exc:
        return _failure(
            RevisionStatus.BOUNDARY_MISMATCH,
            f"variables: {', '.join(exc.variables)}",
        )
    except MalformedRevisionError as exc:
        return _failure(RevisionStatus.MALFORMED_OUTPUT, str(exc))
    except graph.CycleError as exc:
        return _failure(RevisionStatus.MALFORMED_OUTPUT, str(exc))
    return RevisionOutcome(
        status=RevisionStatus.INTEGRATED,
        plan=result.plan,
        touched_external=result.touched_external,
    )


# Edit-engine rejections that the flexible policy retries as reintegration.
_MERGE_FALLBACK_CODES = {"interface-uncovered"}
_SPLIT_FALLBACK_CODES = {"interface-uncovered", "ambiguous-interface", "split-disconnected"}


def auto_merge(
    plan: Plan,
    sel: SubgraphSelection,
    backend: PlannerBackend,
    policy: ReintegrationPolicy = FROZEN,
) -> RevisionOutcome:
    """Ask the backend for a merged-node spec and contract the selection."""
    subplan, boundary = graph.induced_subgraph(plan, sel)
    try:
        spec = backend.auto_merge(subplan, boundary)
    except (BackendError, FeedbackParseError) as exc:
        return _failure(RevisionStatus.BACKEND_ERROR, str(exc))
    try:
        merged = merge_nodes(plan, sel, spec)
    except EditError as exc:
        if policy.mode is FLEXIBLE.mode and exc.code in _MERGE_FALLBACK_CODES:
            node = PlanNode(
                id=-1,
                task=spec.task,
                agent=spec.agent,
                inputs=spec.inputs,
                outputs=spec.outputs,
            )
            return _integrate(plan, sel, make_plan([node], []), FLEXIBLE)
        return _failure(RevisionStatus.INVALID_OP, str(exc), step=0)
    return RevisionOutcome(status=RevisionStatus.INTEGRATED, plan=merged)


def _split_subplan(spec: SplitSpec) -> Plan:
    first = PlanNode(
        id=-1,
        task=spec.first.task,
        agent=spec.first.agent,
        inputs=spec.first.inputs,
        outputs=spec.first.outputs,
    )
    second = PlanNode(
        id=-2,
        task=spec.second.task,
        agent=spec.second.agent,
        inputs=spec.second.inputs,
        outputs=spec.second.outputs,
    )
    edges = []
    if spec.mode is SplitMode.SEQUENTIAL:
        unbound = set(spec.second.unbound_input_names())
        edges = [
            PlanEdge(-1, -2, h, h) for h in spec.first.outputs if h in unbound
        ]
    return make_plan([first, second], edges)


def auto_split(
    plan: Plan,
    node_id: int,
    backend: PlannerBackend,
    policy: ReintegrationPolicy = FROZEN,
) -> RevisionOutcome:
    """Ask the backend how to split one node and apply the split."""
    sel = selection_of({node_id})
    if node_id not in plan.nodes:
        return _failure(RevisionStatus.INVALID_OP, f"unknown node {node_id}", step=0)
    _, boundary = graph.induced_subgraph(plan, sel)
    try:
        spec = backend.auto_split(plan.nodes[node_id], boundary)
    except (BackendError, FeedbackParseError) as exc:
        return _failure(RevisionStatus.BACKEND_ERROR, str(exc))
    try:
        split = split_node(plan, node_id, spec.first, spec.second, spec.mode)
    except EditError as exc:
        if policy.mode is FLEXIBLE.mode and exc.code in _SPLIT_FALLBACK_CODES:
            return _integrate(plan, sel, _split_subplan(spec), FLEXIBLE)
        return _failure(RevisionStatus.INVALID_OP, str(exc), step=0)
    return RevisionOutcome(status=RevisionStatus.INTEGRATED, plan=split)


def revise_by_edit_sequence(
    plan: Plan, feedback: FeedbackText, backend: PlannerBackend
) -> RevisionOutcome:
    """Backend proposes structural edits; the engine applies them all or
    reports the first failing step."""
    if feedback.style is not FeedbackStyle.ID_ANCHORED:
        raise ValueError("edit-sequence revision needs id-anchored feedback")
    try:
        ops = backend.to_edit_sequence(plan, feedback.text)
    except (BackendError, FeedbackParseError) as exc:
        return _failure(RevisionStatus.BACKEND_ERROR, str(exc))
    try:
        result = apply_sequence(plan, ops)
    except SequenceFailure as exc:
        return _failure(RevisionStatus.INVALID_OP, str(exc), step=exc.step_index)
    return RevisionOutcome(
        status=RevisionStatus.INTEGRATED, plan=result, audit=tuple(ops)
    )

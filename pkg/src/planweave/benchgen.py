"""Benchmark synthesis by reverse-breaking gold plans.

Each break operation is named after the repair the resulting feedback asks
for: `add_node` deletes a node and asks to re-add it, `merge_seq` splits a
node into a 2-chain and asks to merge it back, and so on. A break yields the
broken plan, the node selection a targeted revision should receive, and the
exact inverse edit sequence (the repair spec).

Feedback is rendered from the repair spec through fixed templates in two
styles: id_anchored names node ids, deictic refers to "the selected node(s)"
and never contains a node-id token. `parse_feedback` inverts the templates
and `repair_from_feedback` / `revised_subplan_from_feedback` rebuild the
repair from the parsed fields plus the plan structure, so a deterministic
reviser can act as a perfect reference backend. The reconstruction leans on
the gold-plan authoring rules (contiguous ids, edge variable names equal on
both endpoints, tasks mentioning exactly their own variables); see
goldplans.py.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from random import Random
from typing import Iterable, Sequence

from .edits import (
    AddEdge,
    AddNode,
    DeleteEdge,
    EditOp,
    EditSequence,
    MergeNodes,
    NodeSpec,
    SetAgent,
    SetTask,
    SplitMode,
    SplitNode,
    merge_nodes,
    split_node,
)
from .goldplans import GoldPlan, GoldPlanSet, Subset
from .graph import is_contractible
from .model import (
    AgentKind,
    Plan,
    PlanEdge,
    PlanNode,
    SubgraphSelection,
    VarBinding,
    make_plan,
    selection_of,
)
from .serialize import plan_from_doc, plan_to_doc

DATASET_SCHEMA = "planweave-bench/1"


class BreakOpKind(str, Enum):
    ADD_NODE = "add_node"
    CHANGE_DESC = "change_desc"
    CHANGE_AGENT = "change_agent"
    MERGE_SEQ = "merge_seq"
    MERGE_PAR = "merge_par"
    SPLIT_SEQ = "split_seq"
    SPLIT_PAR = "split_par"


class FeedbackStyle(str, Enum):
    ID_ANCHORED = "id_anchored"
    DEICTIC = "deictic"


# Subsets a break kind may draw from; None means any.
_KIND_SUBSETS: dict[BreakOpKind, frozenset[Subset] | None] = {
    BreakOpKind.SPLIT_SEQ: frozenset({Subset.MULTI_HOP, Subset.TOPK_RETRIEVAL}),
    BreakOpKind.SPLIT_PAR: frozenset({Subset.TOPK_RETRIEVAL}),
}

# Distractor lexicon for change_desc: the break swaps the first occurrence.
_LEXICON: dict[str, str] = {
    "plus": "minus",
    "minus": "plus",
    "times": "divided by",
    "divided": "multiplied",
    "longest": "shortest",
    "shortest": "longest",
    "highest": "lowest",
    "lowest": "highest",
    "greater": "smaller",
    "birthplace": "hometown",
}
_LEXICON_RE = re.compile(r"\b(?:%s)\b" % "|".join(sorted(_LEXICON, key=len, reverse=True)))

# Deictic feedback must never reference a node id.
NODE_ID_TOKEN_RE = re.compile(r"(?i)\b(?:node|nodes|id)\s*#?\s*\d+")

# Task shapes the merge breaks fabricate; auto-split recognizes them.
MERGED_SEQ_TASK_RE = re.compile(r"\AFirst, (.+)\. Then, (.+)\.\Z")
MERGED_PAR_TASK_RE = re.compile(
    r"\AIn parallel, complete these subtasks\. \(1\) (.+) \(2\) (.+)\Z"
)

_SNAKE_TOKEN_RE = re.compile(r"\b[A-Za-z][A-Za-z0-9]*(?:_[A-Za-z0-9]+)+\b")


class IneligibleError(Exception):
    """The plan lacks the structural pattern the break kind needs."""

    def __init__(self, kind: BreakOpKind, detail: str):
        super().__init__(f"{kind.value}: {detail}")
        self.kind = kind
        self.detail = detail


class FeedbackParseError(Exception):
    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


class DatasetError(Exception):
    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


@dataclass(frozen=True)
class BreakResult:
    p_initial: Plan
    target_nodes: SubgraphSelection
    repair_spec: EditSequence


@dataclass(frozen=True)
class BenchmarkItem:
    p_initial: Plan
    feedback_id_anchored: str
    feedback_deictic: str
    target_nodes: SubgraphSelection
    p_gold: Plan
    subset: Subset
    op_kind: BreakOpKind
    seed: int
    question: str
    gold_answer: str | None
    gold_name: str


@dataclass(frozen=True)
class GenerationConfig:
    kinds: tuple[BreakOpKind, ...] = tuple(BreakOpKind)
    items_per_kind: int = 25
    seed: int = 0
    subsets: tuple[Subset, ...] | None = None


def _spec_of(node: PlanNode, node_id: int | None = None) -> NodeSpec:
    return NodeSpec(
        task=node.task,
        agent=node.agent,
        inputs=node.inputs,
        outputs=node.outputs,
        id=node_id,
    )


def gap_id(plan: Plan) -> int:
    """Smallest positive id absent from the plan; contiguous ids make this
    the id a break operation freed (or the next fresh one)."""
    ids = set(plan.nodes)
    cursor = 1
    while cursor in ids:
        cursor += 1
    return cursor


def _mentions(variable: str, text: str) -> bool:
    return re.search(rf"\b{re.escape(variable)}\b", text) is not None


def _sorted_edges(plan: Plan) -> list[PlanEdge]:
    return sorted(
        plan.edges,
        key=lambda e: (e.src_node, e.dest_node, e.src_output, e.dest_input),
    )


def merged_node_spec(
    plan: Plan, ids: Iterable[int], task: str, spec_id: int | None = None
) -> NodeSpec:
    """Interface of the selection contracted to one node.

    Inputs are the parts' bindings not fed by an internal edge (first
    occurrence wins); outputs drop variables consumed only inside the
    selection, preserving the parts' declaration order.
    """
    id_set = set(ids)
    parts = [plan.nodes[i] for i in sorted(id_set)]
    internal_fed = {
        (e.dest_node, e.dest_input)
        for e in plan.edges
        if e.src_node in id_set and e.dest_node in id_set
    }
    internal_src = {
        e.src_output
        for e in plan.edges
        if e.src_node in id_set and e.dest_node in id_set
    }
    escaping = {
        e.src_output
        for e in plan.edges
        if e.src_node in id_set and e.dest_node not in id_set
    }
    inputs: list[VarBinding] = []
    seen: set[str] = set()
    for part in parts:
        for binding in part.inputs:
            if (part.id, binding.variable) in internal_fed:
                continue
            if binding.variable in seen:
                continue
            seen.add(binding.variable)
            inputs.append(binding)
    outputs: list[str] = []
    for part in parts:
        for o in part.outputs:
            if o in internal_src and o not in escaping:
                continue
            outputs.append(o)
    return NodeSpec(
        task=task,
        agent=parts[0].agent,
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        id=spec_id,
    )


def split_specs(
    node: PlanNode,
    first_task: str,
    second_task: str,
    mode: SplitMode,
    first_id: int | None = None,
    second_id: int | None = None,
) -> tuple[NodeSpec, NodeSpec]:
    """Partition a node's interface between two part tasks by variable
    mention. Sequential handoffs are the snake_case tokens of the first task
    that name neither an input nor an output of the node."""
    if mode is SplitMode.SEQUENTIAL:
        known = set(node.input_names()) | set(node.outputs)
        handoffs: list[str] = []
        for token in _SNAKE_TOKEN_RE.findall(first_task):
            if token in known or token in handoffs:
                continue
            handoffs.append(token)
        if not handoffs:
            raise FeedbackParseError(
                "no-handoff", "first task names no intermediate variable"
            )
        first_inputs = tuple(b for b in node.inputs if _mentions(b.variable, first_task))
        second_inputs = tuple(
            [VarBinding(h, "") for h in handoffs if _mentions(h, second_task)]
            + [b for b in node.inputs if _mentions(b.variable, second_task)]
        )
        first_out: list[str] = []
        second_out: list[str] = []
        for o in node.outputs:
            if _mentions(o, second_task):
                second_out.append(o)
            elif _mentions(o, first_task):
                first_out.append(o)
            else:
                raise FeedbackParseError(
                    "unassigned-output", f"neither task mentions output {o!r}"
                )
        first = NodeSpec(
            first_task, node.agent, first_inputs, tuple(handoffs) + tuple(first_out),
            id=first_id,
        )
        second = NodeSpec(
            second_task, node.agent, second_inputs, tuple(second_out), id=second_id
        )
        return first, second

    first_out = []
    second_out = []
    for o in node.outputs:
        hit_first = _mentions(o, first_task)
        hit_second = _mentions(o, second_task)
        if hit_first and hit_second:
            raise FeedbackParseError(
                "ambiguous-output", f"both tasks mention output {o!r}"
            )
        if hit_first:
            first_out.append(o)
        elif hit_second:
            second_out.append(o)
        else:
            raise FeedbackParseError(
                "unassigned-output", f"neither task mentions output {o!r}"
            )
    if not first_out or not second_out:
        raise FeedbackParseError(
            "unassigned-output", "each parallel part needs at least one output"
        )
    first = NodeSpec(
        first_task,
        node.agent,
        tuple(b for b in node.inputs if _mentions(b.variable, first_task)),
        tuple(first_out),
        id=first_id,
    )
    second = NodeSpec(
        second_task,
        node.agent,
        tuple(b for b in node.inputs if _mentions(b.variable, second_task)),
        tuple(second_out),
        id=second_id,
    )
    return first, second


def add_node_repair_ops(plan: Plan, spec: NodeSpec) -> EditSequence:
    """Edits that re-add a deleted node and reroute data flow through it.

    Every unbound input is wired from its unique producer, every output is
    wired to each node with a matching unbound input, and the direct edges
    that currently feed those inputs (the splices) are removed.
    """
    if spec.id is None:
        raise FeedbackParseError("missing-id", "add_node repair needs a node id")
    ops: list[EditOp] = [AddNode(spec)]
    for binding in spec.inputs:
        if binding.value != "":
            continue
        producers = sorted(
            n.id for n in plan.nodes.values() if binding.variable in n.outputs
        )
        if len(producers) != 1:
            raise FeedbackParseError(
                "no-producer",
                f"variable {binding.variable!r} has {len(producers)} producers",
            )
        ops.append(
            AddEdge(PlanEdge(producers[0], spec.id, binding.variable, binding.variable))
        )
    removals: list[EditOp] = []
    for o in spec.outputs:
        consumers = sorted(
            n.id
            for n in plan.nodes.values()
            if any(b.variable == o and b.value == "" for b in n.inputs)
        )
        for consumer in consumers:
            ops.append(AddEdge(PlanEdge(spec.id, consumer, o, o)))
            for e in _sorted_edges(plan):
                if e.dest_node == consumer and e.dest_input == o:
                    removals.append(DeleteEdge(e))
    return tuple(ops) + tuple(removals)


def _splice_edges(plan: Plan, node_id: int) -> list[PlanEdge]:
    """Direct (pred, succ) edges standing in for a deleted middle node."""
    incoming = sorted(plan.incoming(node_id), key=lambda e: (e.src_node, e.src_output))
    outgoing = sorted(plan.outgoing(node_id), key=lambda e: (e.dest_node, e.dest_input))
    first_out = {}
    for e in incoming:
        first_out.setdefault(e.src_node, e.src_output)
    first_in = {}
    for e in outgoing:
        first_in.setdefault(e.dest_node, e.dest_input)
    kept = [e for e in plan.edges if node_id not in (e.src_node, e.dest_node)]
    fed = {(e.dest_node, e.dest_input) for e in kept}
    existing = set(kept)
    splices: list[PlanEdge] = []
    for pred in sorted(first_out):
        for succ in sorted(first_in):
            edge = PlanEdge(pred, succ, first_out[pred], first_in[succ])
            if (succ, edge.dest_input) in fed or edge in existing:
                continue
            splices.append(edge)
            fed.add((succ, edge.dest_input))
            existing.add(edge)
    return splices


def _break_add_node(plan: Plan, rng: Random) -> BreakResult:
    has_in = {e.dest_node for e in plan.edges}
    has_out = {e.src_node for e in plan.edges}
    candidates = sorted(i for i in plan.nodes if i in has_in and i in has_out)
    if not candidates:
        raise IneligibleError(BreakOpKind.ADD_NODE, "no interior node to delete")
    nid = rng.choice(candidates)
    node = plan.nodes[nid]
    preds = {e.src_node for e in plan.incoming(nid)}
    succs = {e.dest_node for e in plan.outgoing(nid)}
    kept_nodes = [n for i, n in plan.nodes.items() if i != nid]
    kept_edges = [e for e in plan.edges if nid not in (e.src_node, e.dest_node)]
    p_initial = make_plan(
        kept_nodes, kept_edges + _splice_edges(plan, nid), next_id=plan.next_id
    )
    repair = add_node_repair_ops(p_initial, _spec_of(node, nid))
    return BreakResult(p_initial, selection_of(preds | succs), repair)


def _break_change_desc(plan: Plan, rng: Random) -> BreakResult:
    eligible = sorted(i for i, n in plan.nodes.items() if _LEXICON_RE.search(n.task))
    if not eligible:
        raise IneligibleError(BreakOpKind.CHANGE_DESC, "no task contains a lexicon word")
    nid = rng.choice(eligible)
    node = plan.nodes[nid]
    match = _LEXICON_RE.search(node.task)
    assert match is not None
    corrupted = node.task[: match.start()] + _LEXICON[match.group(0)] + node.task[match.end():]
    nodes = [replace(n, task=corrupted) if i == nid else n for i, n in plan.nodes.items()]
    p_initial = make_plan(nodes, plan.edges, next_id=plan.next_id)
    return BreakResult(p_initial, selection_of({nid}), (SetTask(nid, node.task),))


def _break_change_agent(plan: Plan, rng: Random) -> BreakResult:
    nid = rng.choice(sorted(plan.nodes))
    node = plan.nodes[nid]
    wrong = rng.choice([a for a in AgentKind if a is not node.agent])
    nodes = [replace(n, agent=wrong) if i == nid else n for i, n in plan.nodes.items()]
    p_initial = make_plan(nodes, plan.edges, next_id=plan.next_id)
    return BreakResult(p_initial, selection_of({nid}), (SetAgent(nid, node.agent),))


def _fresh_var(plan: Plan, stem: str) -> str:
    taken = {o for n in plan.nodes.values() for o in n.outputs}
    taken |= {b.variable for n in plan.nodes.values() for b in n.inputs}
    name = stem
    while name in taken:
        name += "_x"
    return name


def _break_merge_seq(plan: Plan, rng: Random) -> BreakResult:
    nid = rng.choice(sorted(plan.nodes))
    node = plan.nodes[nid]
    handoff = _fresh_var(plan, f"partial_{node.outputs[0]}")
    first = NodeSpec(
        f"Prepare {handoff} as groundwork for this goal: {node.task}",
        node.agent,
        node.inputs,
        (handoff,),
        id=nid,
    )
    second = NodeSpec(
        f"Use {handoff} to complete this goal: {node.task}",
        node.agent,
        (VarBinding(handoff, ""),),
        node.outputs,
    )
    second_id = plan.next_id
    p_initial = split_node(plan, nid, first, second, SplitMode.SEQUENTIAL)
    repair = (MergeNodes(frozenset({nid, second_id}), _spec_of(node, nid)),)
    return BreakResult(p_initial, selection_of({nid, second_id}), repair)


def _break_merge_par(plan: Plan, rng: Random) -> BreakResult:
    eligible = sorted(i for i, n in plan.nodes.items() if len(n.outputs) >= 2)
    if not eligible:
        raise IneligibleError(BreakOpKind.MERGE_PAR, "no node produces two outputs")
    nid = rng.choice(eligible)
    node = plan.nodes[nid]
    cut = rng.randrange(1, len(node.outputs))
    first = NodeSpec(
        f"Produce {', '.join(node.outputs[:cut])} toward this goal: {node.task}",
        node.agent,
        node.inputs,
        node.outputs[:cut],
        id=nid,
    )
    second = NodeSpec(
        f"Produce {', '.join(node.outputs[cut:])} toward this goal: {node.task}",
        node.agent,
        node.inputs,
        node.outputs[cut:],
    )
    second_id = plan.next_id
    p_initial = split_node(plan, nid, first, second, SplitMode.PARALLEL)
    repair = (MergeNodes(frozenset({nid, second_id}), _spec_of(node, nid)),)
    return BreakResult(p_initial, selection_of({nid, second_id}), repair)


def _chain_pairs(plan: Plan) -> list[tuple[int, int]]:
    """(u, v) pairs where u's single output flows only into v, v takes edges
    only from u, and both run the same agent."""
    pairs: list[tuple[int, int]] = []
    for u in sorted(plan.nodes):
        out = list(plan.outgoing(u))
        if len(out) != 1 or len(plan.nodes[u].outputs) != 1:
            continue
        v = out[0].dest_node
        if plan.nodes[u].agent is not plan.nodes[v].agent:
            continue
        if len(list(plan.incoming(v))) != 1:
            continue
        pairs.append((u, v))
    return pairs


def _sibling_pairs(plan: Plan) -> list[tuple[int, int]]:
    """Same-agent pairs with no edge between them that contract cleanly."""
    linked = {(e.src_node, e.dest_node) for e in plan.edges}
    ids = sorted(plan.nodes)
    pairs: list[tuple[int, int]] = []
    for pos, x in enumerate(ids):
        for y in ids[pos + 1:]:
            if plan.nodes[x].agent is not plan.nodes[y].agent:
                continue
            if (x, y) in linked or (y, x) in linked:
                continue
            if not is_contractible(plan, selection_of({x, y})):
                continue
            pairs.append((x, y))
    return pairs


def _break_split_seq(plan: Plan, rng: Random) -> BreakResult:
    pairs = _chain_pairs(plan)
    if not pairs:
        raise IneligibleError(BreakOpKind.SPLIT_SEQ, "no mergeable 2-chain")
    u, v = rng.choice(pairs)
    task = f"First, {plan.nodes[u].task}. Then, {plan.nodes[v].task}."
    merged = merged_node_spec(plan, (u, v), task, spec_id=u)
    p_initial = merge_nodes(plan, selection_of({u, v}), merged)
    repair = (
        SplitNode(
            u,
            _spec_of(plan.nodes[u], u),
            _spec_of(plan.nodes[v], v),
            SplitMode.SEQUENTIAL,
        ),
    )
    return BreakResult(p_initial, selection_of({u}), repair)


def _break_split_par(plan: Plan, rng: Random) -> BreakResult:
    pairs = _sibling_pairs(plan)
    if not pairs:
        raise IneligibleError(BreakOpKind.SPLIT_PAR, "no mergeable sibling pair")
    x, y = rng.choice(pairs)
    task = (
        "In parallel, complete these subtasks."
        f" (1) {plan.nodes[x].task} (2) {plan.nodes[y].task}"
    )
    merged = merged_node_spec(plan, (x, y), task, spec_id=x)
    p_initial = merge_nodes(plan, selection_of({x, y}), merged)
    repair = (
        SplitNode(
            x,
            _spec_of(plan.nodes[x], x),
            _spec_of(plan.nodes[y], y),
            SplitMode.PARALLEL,
        ),
    )
    return BreakResult(p_initial, selection_of({x}), repair)


_BREAKERS = {
    BreakOpKind.ADD_NODE: _break_add_node,
    BreakOpKind.CHANGE_DESC: _break_change_desc,
    BreakOpKind.CHANGE_AGENT: _break_change_agent,
    BreakOpKind.MERGE_SEQ: _break_merge_seq,
    BreakOpKind.MERGE_PAR: _break_merge_par,
    BreakOpKind.SPLIT_SEQ: _break_split_seq,
    BreakOpKind.SPLIT_PAR: _break_split_par,
}


def break_plan(gold: Plan, kind: BreakOpKind, seed: int) -> BreakResult:
    """Apply one break operation; deterministic in (gold, kind, seed)."""
    return _BREAKERS[kind](gold, Random(seed))


def kind_eligible(gold: Plan, kind: BreakOpKind) -> bool:
    try:
        _BREAKERS[kind](gold, Random(0))
    except IneligibleError:
        return False
    return True


def _render_bindings(inputs: Sequence[VarBinding]) -> str:
    return ", ".join(
        f"{b.variable}={b.value}" if b.value != "" else b.variable for b in inputs
    )


def render_feedback(repair: EditSequence, style: FeedbackStyle) -> str:
    """Template the repair spec into one feedback sentence (or two)."""
    anchored = style is FeedbackStyle.ID_ANCHORED
    head = repair[0]
    if isinstance(head, AddNode):
        spec = head.spec
        lead = (
            f"Add a new {spec.agent.value} node with id {spec.id}"
            if anchored
            else f"Add a new {spec.agent.value} node"
        )
        return (
            f'{lead} that does the following: "{spec.task}".'
            f" It takes inputs ({_render_bindings(spec.inputs)}) and produces"
            f" outputs ({', '.join(spec.outputs)})."
            " Reroute the affected edges through it."
        )
    if isinstance(head, SetTask):
        target = f"node {head.node_id}" if anchored else "the selected node"
        return f'Rewrite the task of {target} to: "{head.task}".'
    if isinstance(head, SetAgent):
        target = f"node {head.node_id}" if anchored else "the selected node"
        return f"Change the agent of {target} to {head.agent.value}."
    if isinstance(head, MergeNodes):
        if anchored:
            i, j = sorted(head.node_ids)
            lead = f"Merge nodes {i} and {j}"
        else:
            lead = "Merge the selected nodes"
        return f"{lead} into a single node that {head.merged.task}."
    if isinstance(head, SplitNode):
        target = f"node {head.node_id}" if anchored else "the selected node"
        if head.mode is SplitMode.SEQUENTIAL:
            return (
                f"Split {target} into two sequential steps."
                f' First: "{head.first.task}". Then: "{head.second.task}".'
            )
        return (
            f"Split {target} into two parallel steps:"
            f' (1) "{head.first.task}" (2) "{head.second.task}".'
        )
    raise FeedbackParseError("unrenderable", f"no template for {type(head).__name__}")


class FeedbackOp(str, Enum):
    ADD_NODE = "add_node"
    REWRITE_TASK = "rewrite_task"
    CHANGE_AGENT = "change_agent"
    MERGE = "merge"
    SPLIT_SEQ = "split_seq"
    SPLIT_PAR = "split_par"


@dataclass(frozen=True)
class ParsedFeedback:
    op: FeedbackOp
    node_id: int | None = None
    pair: tuple[int, int] | None = None
    agent: AgentKind | None = None
    task: str | None = None
    first_task: str | None = None
    second_task: str | None = None
    inputs: tuple[VarBinding, ...] = ()
    outputs: tuple[str, ...] = ()


_AGENTS = "code|math|search|commonsense"
_ADD_RE = re.compile(
    rf'\AAdd a new ({_AGENTS}) node(?: with id (\d+))? that does the following:'
    r' "([^"]+)"\. It takes inputs \(([^)]*)\) and produces outputs \(([^)]*)\)\.'
    r" Reroute the affected edges through it\.\Z"
)
_REWRITE_RE = re.compile(
    r'\ARewrite the task of (?:node (\d+)|the selected node) to: "([^"]+)"\.\Z'
)
_AGENT_RE = re.compile(
    rf"\AChange the agent of (?:node (\d+)|the selected node) to ({_AGENTS})\.\Z"
)
_MERGE_RE = re.compile(
    r"\AMerge (?:nodes (\d+) and (\d+)|the selected nodes)"
    r" into a single node that (.+)\.\Z"
)
_SPLIT_SEQ_RE = re.compile(
    r"\ASplit (?:node (\d+)|the selected node) into two sequential steps\."
    r' First: "([^"]+)"\. Then: "([^"]+)"\.\Z'
)
_SPLIT_PAR_RE = re.compile(
    r"\ASplit (?:node (\d+)|the selected node) into two parallel steps:"
    r' \(1\) "([^"]+)" \(2\) "([^"]+)"\.\Z'
)


def _parse_bindings(text: str) -> tuple[VarBinding, ...]:
    if not text.strip():
        return ()
    bindings = []
    for token in text.split(", "):
        name, sep, value = token.partition("=")
        bindings.append(VarBinding(name, value if sep else ""))
    return tuple(bindings)


def parse_feedback(text: str) -> ParsedFeedback:
    """Invert the feedback templates; raises when no template matches."""
    if m := _ADD_RE.match(text):
        agent, nid, task, ins, outs = m.groups()
        return ParsedFeedback(
            op=FeedbackOp.ADD_NODE,
            node_id=int(nid) if nid else None,
            agent=AgentKind(agent),
            task=task,
            inputs=_parse_bindings(ins),
            outputs=tuple(outs.split(", ")) if outs.strip() else (),
        )
    if m := _REWRITE_RE.match(text):
        nid, task = m.groups()
        return ParsedFeedback(
            op=FeedbackOp.REWRITE_TASK,
            node_id=int(nid) if nid else None,
            task=task,
        )
    if m := _AGENT_RE.match(text):
        nid, agent = m.groups()
        return ParsedFeedback(
            op=FeedbackOp.CHANGE_AGENT,
            node_id=int(nid) if nid else None,
            agent=AgentKind(agent),
        )
    if m := _MERGE_RE.match(text):
        i, j, task = m.groups()
        return ParsedFeedback(
            op=FeedbackOp.MERGE,
            pair=(int(i), int(j)) if i else None,
            task=task,
        )
    if m := _SPLIT_SEQ_RE.match(text):
        nid, t1, t2 = m.groups()
        return ParsedFeedback(
            op=FeedbackOp.SPLIT_SEQ,
            node_id=int(nid) if nid else None,
            first_task=t1,
            second_task=t2,
        )
    if m := _SPLIT_PAR_RE.match(text):
        nid, t1, t2 = m.groups()
        return ParsedFeedback(
            op=FeedbackOp.SPLIT_PAR,
            node_id=int(nid) if nid else None,
            first_task=t1,
            second_task=t2,
        )
    raise FeedbackParseError("unparseable", text[:120])


def _resolve_node(
    parsed: ParsedFeedback, plan: Plan, selection: SubgraphSelection | None
) -> int:
    if parsed.node_id is not None:
        if parsed.node_id not in plan.nodes:
            raise FeedbackParseError("unknown-node", f"node {parsed.node_id}")
        return parsed.node_id
    if selection is None or len(selection.node_ids) != 1:
        raise FeedbackParseError(
            "no-selection", "deictic feedback needs a single selected node"
        )
    (nid,) = selection.node_ids
    return nid


def repair_from_feedback(
    parsed: ParsedFeedback, plan: Plan, selection: SubgraphSelection | None = None
) -> EditSequence:
    """Rebuild the exact repair edits from parsed feedback and the plan."""
    if parsed.op is FeedbackOp.ADD_NODE:
        nid = parsed.node_id if parsed.node_id is not None else gap_id(plan)
        assert parsed.task is not None and parsed.agent is not None
        spec = NodeSpec(parsed.task, parsed.agent, parsed.inputs, parsed.outputs, id=nid)
        return add_node_repair_ops(plan, spec)
    if parsed.op is FeedbackOp.REWRITE_TASK:
        nid = _resolve_node(parsed, plan, selection)
        assert parsed.task is not None
        return (SetTask(nid, parsed.task),)
    if parsed.op is FeedbackOp.CHANGE_AGENT:
        nid = _resolve_node(parsed, plan, selection)
        assert parsed.agent is not None
        return (SetAgent(nid, parsed.agent),)
    if parsed.op is FeedbackOp.MERGE:
        if parsed.pair is not None:
            ids = sorted(parsed.pair)
        elif selection is not None and len(selection.node_ids) >= 2:
            ids = sorted(selection.node_ids)
        else:
            raise FeedbackParseError(
                "no-selection", "deictic merge needs a multi-node selection"
            )
        for i in ids:
            if i not in plan.nodes:
                raise FeedbackParseError("unknown-node", f"node {i}")
        assert parsed.task is not None
        spec = merged_node_spec(plan, ids, parsed.task, spec_id=min(ids))
        return (MergeNodes(frozenset(ids), spec),)
    nid = _resolve_node(parsed, plan, selection)
    assert parsed.first_task is not None and parsed.second_task is not None
    mode = (
        SplitMode.SEQUENTIAL
        if parsed.op is FeedbackOp.SPLIT_SEQ
        else SplitMode.PARALLEL
    )
    first, second = split_specs(
        plan.nodes[nid],
        parsed.first_task,
        parsed.second_task,
        mode,
        first_id=nid,
        second_id=gap_id(plan),
    )
    return (SplitNode(nid, first, second, mode),)


def revised_subplan_from_feedback(parsed: ParsedFeedback, subplan: Plan) -> Plan:
    """The reference targeted revision: a subplan with negative ids on new
    nodes and no crossing edges, leaving boundary wiring to reintegration."""
    nodes = dict(subplan.nodes)
    edges = list(subplan.edges)
    if parsed.op is FeedbackOp.REWRITE_TASK:
        nid = _resolve_node(parsed, subplan, selection_of(nodes))
        assert parsed.task is not None
        nodes[nid] = replace(nodes[nid], task=parsed.task)
        return make_plan(nodes.values(), edges, next_id=subplan.next_id)
    if parsed.op is FeedbackOp.CHANGE_AGENT:
        nid = _resolve_node(parsed, subplan, selection_of(nodes))
        assert parsed.agent is not None
        nodes[nid] = replace(nodes[nid], agent=parsed.agent)
        return make_plan(nodes.values(), edges, next_id=subplan.next_id)
    if parsed.op is FeedbackOp.ADD_NODE:
        assert parsed.task is not None and parsed.agent is not None
        new = PlanNode(
            id=-1,
            task=parsed.task,
            agent=parsed.agent,
            inputs=parsed.inputs,
            outputs=parsed.outputs,
        )
        out_names = set(parsed.outputs)
        edges = [e for e in edges if e.dest_input not in out_names]
        for binding in parsed.inputs:
            if binding.value != "":
                continue
            producers = sorted(
                n.id for n in nodes.values() if binding.variable in n.outputs
            )
            if len(producers) == 1:
                edges.append(
                    PlanEdge(producers[0], -1, binding.variable, binding.variable)
                )
        for o in parsed.outputs:
            for n in sorted(nodes.values(), key=lambda n: n.id):
                if any(b.variable == o and b.value == "" for b in n.inputs):
                    edges.append(PlanEdge(-1, n.id, o, o))
        nodes[-1] = new
        return make_plan(nodes.values(), edges)
    if parsed.op is FeedbackOp.MERGE:
        assert parsed.task is not None
        spec = merged_node_spec(subplan, list(nodes), parsed.task)
        merged = PlanNode(
            id=-1,
            task=spec.task,
            agent=spec.agent,
            inputs=spec.inputs,
            outputs=spec.outputs,
        )
        return make_plan([merged], [])
    if len(nodes) != 1:
        raise FeedbackParseError(
            "no-selection", "split feedback needs a single selected node"
        )
    (node,) = nodes.values()
    assert parsed.first_task is not None and parsed.second_task is not None
    mode = (
        SplitMode.SEQUENTIAL
        if parsed.op is FeedbackOp.SPLIT_SEQ
        else SplitMode.PARALLEL
    )
    first, second = split_specs(
        node, parsed.first_task, parsed.second_task, mode, first_id=-1, second_id=-2
    )
    part_nodes = [
        PlanNode(id=-1, task=first.task, agent=first.agent, inputs=first.inputs, outputs=first.outputs),
        PlanNode(id=-2, task=second.task, agent=second.agent, inputs=second.inputs, outputs=second.outputs),
    ]
    part_edges = []
    if mode is SplitMode.SEQUENTIAL:
        second_unbound = set(second.unbound_input_names())
        for h in first.outputs:
            if h in second_unbound:
                part_edges.append(PlanEdge(-1, -2, h, h))
    return make_plan(part_nodes, part_edges)


def _item_seed(master: int, kind: BreakOpKind, index: int) -> int:
    digest = hashlib.blake2b(
        f"{master}:{kind.value}:{index}".encode("ascii"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def generate_dataset(
    golds: GoldPlanSet, config: GenerationConfig
) -> list[BenchmarkItem]:
    """Deterministically break gold plans into benchmark items.

    Eligible golds rotate per kind from a seeded start offset so every kind
    spreads across plans; each item re-seeds from (seed, kind, index).
    """
    items: list[BenchmarkItem] = []
    for kind in config.kinds:
        allowed = _KIND_SUBSETS.get(kind)
        eligible = [
            g
            for g in sorted(golds.plans, key=lambda g: g.name)
            if (allowed is None or g.subset in allowed)
            and (config.subsets is None or g.subset in config.subsets)
            and kind_eligible(g.plan, kind)
        ]
        if not eligible:
            raise DatasetError(
                "insufficient-eligible-plans", f"no eligible gold plan for {kind.value}"
            )
        start = Random(_item_seed(config.seed, kind, -1)).randrange(len(eligible))
        for index in range(config.items_per_kind):
            gold = eligible[(start + index) % len(eligible)]
            seed = _item_seed(config.seed, kind, index)
            result = break_plan(gold.plan, kind, seed)
            items.append(
                BenchmarkItem(
                    p_initial=result.p_initial,
                    feedback_id_anchored=render_feedback(
                        result.repair_spec, FeedbackStyle.ID_ANCHORED
                    ),
                    feedback_deictic=render_feedback(
                        result.repair_spec, FeedbackStyle.DEICTIC
                    ),
                    target_nodes=result.target_nodes,
                    p_gold=gold.plan,
                    subset=gold.subset,
                    op_kind=kind,
                    seed=seed,
                    question=gold.question,
                    gold_answer=gold.answer,
                    gold_name=gold.name,
                )
            )
    return items


def item_to_doc(item: BenchmarkItem) -> dict:
    return {
        "gold_name": item.gold_name,
        "subset": item.subset.value,
        "op_kind": item.op_kind.value,
        "seed": item.seed,
        "question": item.question,
        "gold_answer": item.gold_answer,
        "feedback_id_anchored": item.feedback_id_anchored,
        "feedback_deictic": item.feedback_deictic,
        "target_nodes": sorted(item.target_nodes.node_ids),
        "p_initial": plan_to_doc(item.p_initial),
        "p_gold": plan_to_doc(item.p_gold),
    }


def item_from_doc(doc: dict) -> BenchmarkItem:
    return BenchmarkItem(
        p_initial=plan_from_doc(doc["p_initial"]),
        feedback_id_anchored=doc["feedback_id_anchored"],
        feedback_deictic=doc["feedback_deictic"],
        target_nodes=selection_of(doc["target_nodes"]),
        p_gold=plan_from_doc(doc["p_gold"]),
        subset=Subset(doc["subset"]),
        op_kind=BreakOpKind(doc["op_kind"]),
        seed=doc["seed"],
        question=doc["question"],
        gold_answer=doc.get("gold_answer"),
        gold_name=doc["gold_name"],
    )


def store_dataset(items: Iterable[BenchmarkItem], path: str | Path) -> None:
    lines = [json.dumps({"schema": DATASET_SCHEMA}, sort_keys=True)]
    lines += [json.dumps(item_to_doc(i), sort_keys=True) for i in items]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dataset(path: str | Path) -> list[BenchmarkItem]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise DatasetError("malformed-line", "line 1: empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DatasetError("malformed-line", f"line 1: {exc}") from exc
    if not isinstance(header, dict) or header.get("schema") != DATASET_SCHEMA:
        raise DatasetError("bad-schema", f"expected header {DATASET_SCHEMA!r}")
    items = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            items.append(item_from_doc(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise DatasetError("malformed-line", f"line {number}: {exc}") from exc
    return items

"""Deterministic plan editing.

Every operation is a small value object applied through ``apply_op``, which
returns a new plan or raises ``EditError``. Sequences are transactional:
``apply_sequence`` reports the first failing step and discards the partial
result. All successful results remain draft-valid; input and output edits
cascade-remove edges whose variable reference disappeared so that no edge is
ever left dangling.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Union

from .graph import boundary_of, is_acyclic, is_contractible
from .model import (
    IDENT_RE,
    AgentKind,
    NodeStatus,
    Plan,
    PlanEdge,
    PlanNode,
    SubgraphSelection,
    VarBinding,
    make_plan,
    selection_of,
)
from .serialize import ParseError, _parse_agent, edge_from_doc, edge_to_doc


class EditError(ValueError):
    def __init__(self, code: str, detail: str, variable: str | None = None):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail
        self.variable = variable


@dataclass(frozen=True)
class NodeSpec:
    """Authorable node content; the id is optional and usually assigned."""

    task: str
    agent: AgentKind
    inputs: tuple[VarBinding, ...] = ()
    outputs: tuple[str, ...] = ()
    id: int | None = None

    def input_names(self) -> tuple[str, ...]:
        return tuple(b.variable for b in self.inputs)

    def unbound_input_names(self) -> tuple[str, ...]:
        return tuple(b.variable for b in self.inputs if b.value == "")


class SplitMode(str, Enum):
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"


@dataclass(frozen=True)
class AddNode:
    spec: NodeSpec


@dataclass(frozen=True)
class DeleteNode:
    node_id: int


@dataclass(frozen=True)
class DuplicateNode:
    node_id: int


@dataclass(frozen=True)
class SetTask:
    node_id: int
    task: str


@dataclass(frozen=True)
class SetAgent:
    node_id: int
    agent: AgentKind


@dataclass(frozen=True)
class SetInputs:
    node_id: int
    inputs: tuple[VarBinding, ...]


@dataclass(frozen=True)
class SetOutputs:
    node_id: int
    outputs: tuple[str, ...]


@dataclass(frozen=True)
class AddEdge:
    edge: PlanEdge


@dataclass(frozen=True)
class DeleteEdge:
    edge: PlanEdge


@dataclass(frozen=True)
class MergeNodes:
    node_ids: frozenset[int]
    merged: NodeSpec


@dataclass(frozen=True)
class SplitNode:
    node_id: int
    first: NodeSpec
    second: NodeSpec
    mode: SplitMode


EditOp = Union[
    AddNode,
    DeleteNode,
    DuplicateNode,
    SetTask,
    SetAgent,
    SetInputs,
    SetOutputs,
    AddEdge,
    DeleteEdge,
    MergeNodes,
    SplitNode,
]
EditSequence = tuple[EditOp, ...]


@dataclass
class SequenceFailure(Exception):
    step_index: int
    error: EditError
    message: str = field(init=False)

    def __post_init__(self) -> None:
        self.message = f"step {self.step_index}: {self.error}"
        super().__init__(self.message)


def _require_node(plan: Plan, node_id: int) -> PlanNode:
    if not plan.has_node(node_id):
        raise EditError("unknown-id", f"no node with id {node_id}")
    return plan.nodes[node_id]


def _check_spec(spec: NodeSpec) -> None:
    seen: set[str] = set()
    for b in spec.inputs:
        if not IDENT_RE.match(b.variable):
            raise EditError(
                "invalid-variable",
                f"input variable {b.variable!r} is not snake_case",
                variable=b.variable,
            )
        if b.variable in seen:
            raise EditError(
                "duplicate-variable",
                f"input variable {b.variable!r} declared twice",
                variable=b.variable,
            )
        seen.add(b.variable)
    seen = set()
    for name in spec.outputs:
        if not IDENT_RE.match(name):
            raise EditError(
                "invalid-variable",
                f"output {name!r} is not snake_case",
                variable=name,
            )
        if name in seen:
            raise EditError(
                "duplicate-variable", f"output {name!r} declared twice", variable=name
            )
        seen.add(name)


def _claim_id(plan: Plan, spec: NodeSpec, forbidden: Iterable[int] = ()) -> tuple[int, int]:
    """Resolve the id a spec gets, returning (id, updated next_id)."""
    taken = set(plan.nodes) | set(forbidden)
    if spec.id is None:
        new_id = plan.next_id
        while new_id in taken:
            new_id += 1
        return new_id, new_id + 1
    if spec.id <= 0:
        raise EditError("invalid-id", f"committed node id must be positive, got {spec.id}")
    if spec.id in taken:
        raise EditError("id-collision", f"node id {spec.id} already exists")
    return spec.id, max(plan.next_id, spec.id + 1)


def _spec_to_node(spec: NodeSpec, node_id: int) -> PlanNode:
    return PlanNode(
        id=node_id,
        task=spec.task,
        agent=spec.agent,
        inputs=spec.inputs,
        outputs=spec.outputs,
        status=NodeStatus.PENDING,
        trace=None,
    )


def add_node(plan: Plan, spec: NodeSpec) -> Plan:
    _check_spec(spec)
    new_id, next_id = _claim_id(plan, spec)
    nodes = dict(plan.nodes)
    nodes[new_id] = _spec_to_node(spec, new_id)
    return make_plan(nodes.values(), plan.edges, next_id=next_id)


def delete_node(plan: Plan, node_id: int) -> Plan:
    _require_node(plan, node_id)
    nodes = [n for i, n in plan.nodes.items() if i != node_id]
    edges = [e for e in plan.edges if node_id not in (e.src_node, e.dest_node)]
    return make_plan(nodes, edges, next_id=plan.next_id)


def duplicate_node(plan: Plan, node_id: int) -> Plan:
    original = _require_node(plan, node_id)
    spec = NodeSpec(
        task=original.task,
        agent=original.agent,
        inputs=original.inputs,
        outputs=original.outputs,
    )
    return add_node(plan, spec)


def set_task(plan: Plan, node_id: int, task: str) -> Plan:
    node = _require_node(plan, node_id)
    nodes = dict(plan.nodes)
    nodes[node_id] = replace(node, task=task)
    return make_plan(nodes.values(), plan.edges, next_id=plan.next_id)


def set_agent(plan: Plan, node_id: int, agent: AgentKind) -> Plan:
    node = _require_node(plan, node_id)
    nodes = dict(plan.nodes)
    nodes[node_id] = replace(node, agent=agent)
    return make_plan(nodes.values(), plan.edges, next_id=plan.next_id)


def set_inputs(plan: Plan, node_id: int, inputs: tuple[VarBinding, ...]) -> Plan:
    node = _require_node(plan, node_id)
    _check_spec(NodeSpec(task=node.task, agent=node.agent, inputs=inputs))
    names = {b.variable for b in inputs}
    nodes = dict(plan.nodes)
    nodes[node_id] = replace(node, inputs=tuple(inputs))
    edges = [
        e
        for e in plan.edges
        if not (e.dest_node == node_id and e.dest_input not in names)
    ]
    return make_plan(nodes.values(), edges, next_id=plan.next_id)


def set_outputs(plan: Plan, node_id: int, outputs: tuple[str, ...]) -> Plan:
    node = _require_node(plan, node_id)
    _check_spec(NodeSpec(task=node.task, agent=node.agent, outputs=tuple(outputs)))
    names = set(outputs)
    nodes = dict(plan.nodes)
    nodes[node_id] = replace(node, outputs=tuple(outputs))
    edges = [
        e
        for e in plan.edges
        if not (e.src_node == node_id and e.src_output not in names)
    ]
    return make_plan(nodes.values(), edges, next_id=plan.next_id)


def add_edge(plan: Plan, edge: PlanEdge) -> Plan:
    src = _require_node(plan, edge.src_node)
    dest = _require_node(plan, edge.dest_node)
    if edge.src_output not in src.outputs:
        raise EditError(
            "unknown-variable",
            f"node {src.id} has no output {edge.src_output!r}",
            variable=edge.src_output,
        )
    if edge.dest_input not in dest.input_names():
        raise EditError(
            "unknown-variable",
            f"node {dest.id} has no input {edge.dest_input!r}",
            variable=edge.dest_input,
        )
    if edge in plan.edges:
        raise EditError("duplicate-edge", f"edge already present: {edge}")
    candidate = make_plan(
        plan.nodes.values(), plan.edges + (edge,), next_id=plan.next_id
    )
    if not is_acyclic(candidate):
        raise EditError(
            "would-create-cycle",
            f"edge {edge.src_node}->{edge.dest_node} would close a cycle",
        )
    return candidate


def delete_edge(plan: Plan, edge: PlanEdge) -> Plan:
    if edge not in plan.edges:
        raise EditError("unknown-edge", f"edge not present: {edge}")
    edges = [e for e in plan.edges if e != edge]
    return make_plan(plan.nodes.values(), edges, next_id=plan.next_id)


def merge_nodes(plan: Plan, sel: SubgraphSelection, merged: NodeSpec) -> Plan:
    """Contract a selection to a single node, keeping the boundary fixed."""
    for i in sel.node_ids:
        _require_node(plan, i)
    _check_spec(merged)
    if not is_contractible(plan, sel):
        raise EditError(
            "not-contractible",
            f"a path leaves and re-enters the selection {sorted(sel.node_ids)}",
        )
    boundary = boundary_of(plan, sel)
    input_names = set(merged.input_names())
    for link in boundary.inbound:
        if link.dest_input not in input_names:
            raise EditError(
                "interface-uncovered",
                f"merged node lacks input {link.dest_input!r} required by the boundary",
                variable=link.dest_input,
            )
    output_names = set(merged.outputs)
    for link in boundary.outbound:
        if link.src_output not in output_names:
            raise EditError(
                "interface-uncovered",
                f"merged node lacks output {link.src_output!r} required by the boundary",
                variable=link.src_output,
            )
    survivors = {i: n for i, n in plan.nodes.items() if i not in sel.node_ids}
    new_id, next_id = _claim_id(
        replace(plan, nodes=survivors), merged, forbidden=()
    )
    nodes = list(survivors.values()) + [_spec_to_node(merged, new_id)]
    edges = {
        e
        for e in plan.edges
        if e.src_node not in sel.node_ids and e.dest_node not in sel.node_ids
    }
    for link in boundary.inbound:
        edges.add(PlanEdge(link.src_node, new_id, link.src_output, link.dest_input))
    for link in boundary.outbound:
        edges.add(PlanEdge(new_id, link.dest_node, link.src_output, link.dest_input))
    result = make_plan(nodes, edges, next_id=next_id)
    if not is_acyclic(result):
        raise EditError("would-create-cycle", "merge produced a cyclic plan")
    return result


def split_node(
    plan: Plan,
    node_id: int,
    first: NodeSpec,
    second: NodeSpec,
    mode: SplitMode,
) -> Plan:
    """Replace one node by two, re-attaching its edges by variable name.

    Sequential mode wires every output of ``first`` that ``second`` lists as
    an unbound input (the handoff variables) and routes outgoing variables
    declared by both parts through ``second``. Parallel mode creates two
    siblings and requires each adopted edge to have exactly one adopting part.
    """
    original = _require_node(plan, node_id)
    _check_spec(first)
    _check_spec(second)

    handoff: tuple[str, ...] = ()
    if mode is SplitMode.SEQUENTIAL:
        second_unbound = set(second.unbound_input_names())
        handoff = tuple(v for v in first.outputs if v in second_unbound)
        if not handoff:
            raise EditError(
                "split-disconnected",
                "sequential split requires first.outputs to feed second's unbound inputs",
            )

    base = {i: n for i, n in plan.nodes.items() if i != node_id}
    base_plan = replace(plan, nodes=base)
    first_id, next_id = _claim_id(base_plan, first)
    second_id, next_id = _claim_id(
        replace(base_plan, nodes=base, next_id=next_id), second, forbidden={first_id}
    )

    first_inputs = set(first.input_names())
    second_inputs = set(second.input_names())
    edges: set[PlanEdge] = {
        e for e in plan.edges if node_id not in (e.src_node, e.dest_node)
    }

    for e in plan.incoming(node_id):
        candidates: list[int] = []
        if e.dest_input in first_inputs:
            candidates.append(first_id)
        if e.dest_input in second_inputs and not (
            mode is SplitMode.SEQUENTIAL and e.dest_input in handoff
        ):
            candidates.append(second_id)
        if not candidates:
            raise EditError(
                "interface-uncovered",
                f"neither part declares input {e.dest_input!r} fed by node {e.src_node}",
                variable=e.dest_input,
            )
        for c in candidates:
            edges.add(PlanEdge(e.src_node, c, e.src_output, e.dest_input))

    first_outputs = set(first.outputs)
    second_outputs = set(second.outputs)
    for e in plan.outgoing(node_id):
        in_first = e.src_output in first_outputs
        in_second = e.src_output in second_outputs
        if not in_first and not in_second:
            raise EditError(
                "interface-uncovered",
                f"neither part declares output {e.src_output!r} consumed by node {e.dest_node}",
                variable=e.src_output,
            )
        if in_first and in_second:
            if mode is SplitMode.PARALLEL:
                raise EditError(
                    "ambiguous-interface",
                    f"both parts declare output {e.src_output!r}; adoption is ambiguous",
                    variable=e.src_output,
                )
            adopter = second_id
        else:
            adopter = first_id if in_first else second_id
        edges.add(PlanEdge(adopter, e.dest_node, e.src_output, e.dest_input))

    if mode is SplitMode.SEQUENTIAL:
        for h in handoff:
            edges.add(PlanEdge(first_id, second_id, h, h))

    nodes = list(base.values()) + [
        _spec_to_node(first, first_id),
        _spec_to_node(second, second_id),
    ]
    result = make_plan(nodes, edges, next_id=next_id)
    if not is_acyclic(result):
        raise EditError("would-create-cycle", "split produced a cyclic plan")
    return result


def apply_op(plan: Plan, op: EditOp) -> Plan:
    if isinstance(op, AddNode):
        return add_node(plan, op.spec)
    if isinstance(op, DeleteNode):
        return delete_node(plan, op.node_id)
    if isinstance(op, DuplicateNode):
        return duplicate_node(plan, op.node_id)
    if isinstance(op, SetTask):
        return set_task(plan, op.node_id, op.task)
    if isinstance(op, SetAgent):
        return set_agent(plan, op.node_id, op.agent)
    if isinstance(op, SetInputs):
        return set_inputs(plan, op.node_id, op.inputs)
    if isinstance(op, SetOutputs):
        return set_outputs(plan, op.node_id, op.outputs)
    if isinstance(op, AddEdge):
        return add_edge(plan, op.edge)
    if isinstance(op, DeleteEdge):
        return delete_edge(plan, op.edge)
    if isinstance(op, MergeNodes):
        return merge_nodes(plan, selection_of(op.node_ids), op.merged)
    if isinstance(op, SplitNode):
        return split_node(plan, op.node_id, op.first, op.second, op.mode)
    raise EditError("invalid-op", f"unsupported op {type(op).__name__}")


def apply_sequence(plan: Plan, ops: Iterable[EditOp]) -> Plan:
    current = plan
    for index, op in enumerate(ops):
        try:
            current = apply_op(current, op)
        except EditError as exc:
            raise SequenceFailure(step_index=index, error=exc) from exc
    return current


def touched_node_ids(before: Plan, after: Plan) -> frozenset[int]:
    """Ids in ``after`` whose content or feeding edges changed.

    Used by callers that must invalidate cached execution state after edits.
    """
    touched: set[int] = set()
    before_in: dict[int, set[PlanEdge]] = {i: set() for i in before.nodes}
    after_in: dict[int, set[PlanEdge]] = {i: set() for i in after.nodes}
    for e in before.edges:
        before_in.setdefault(e.dest_node, set()).add(e)
    for e in after.edges:
        after_in.setdefault(e.dest_node, set()).add(e)
    for i, node in after.nodes.items():
        if i not in before.nodes:
            touched.add(i)
            continue
        prior = before.nodes[i]
        if (
            prior.task != node.task
            or prior.agent != node.agent
            or prior.inputs != node.inputs
            or prior.outputs != node.outputs
            or before_in.get(i, set()) != after_in.get(i, set())
        ):
            touched.add(i)
    return frozenset(touched)


# Wire encoding: tagged JSON objects, one per op.


def _spec_to_doc(spec: NodeSpec) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "task": spec.task,
        "agent_name": spec.agent.value,
        "input": [{"variable": b.variable, "value": b.value} for b in spec.inputs],
        "output": list(spec.outputs),
    }
    if spec.id is not None:
        doc["id"] = spec.id
    return doc


def _spec_from_doc(doc: Any, where: str) -> NodeSpec:
    if not isinstance(doc, dict):
        raise ParseError("malformed-document", f"{where} must be an object")
    task = doc.get("task")
    if not isinstance(task, str):
        raise ParseError("malformed-document", f"{where}.task must be str")
    agent = _parse_agent(doc.get("agent_name"), where)
    inputs = []
    for k, item in enumerate(doc.get("input", ())):
        if not isinstance(item, dict) or not isinstance(item.get("variable"), str):
            raise ParseError("malformed-document", f"{where}.input[{k}] is malformed")
        inputs.append(VarBinding(item["variable"], item.get("value", "")))
    outputs = []
    for k, item in enumerate(doc.get("output", ())):
        if not isinstance(item, str):
            raise ParseError("malformed-document", f"{where}.output[{k}] must be str")
        outputs.append(item)
    spec_id = doc.get("id")
    if spec_id is not None and (isinstance(spec_id, bool) or not isinstance(spec_id, int)):
        raise ParseError("malformed-document", f"{where}.id must be an integer")
    return NodeSpec(
        task=task, agent=agent, inputs=tuple(inputs), outputs=tuple(outputs), id=spec_id
    )


def op_to_doc(op: EditOp) -> dict[str, Any]:
    if isinstance(op, AddNode):
        return {"op": "add_node", "node": _spec_to_doc(op.spec)}
    if isinstance(op, DeleteNode):
        return {"op": "delete_node", "id": op.node_id}
    if isinstance(op, DuplicateNode):
        return {"op": "duplicate_node", "id": op.node_id}
    if isinstance(op, SetTask):
        return {"op": "set_task", "id": op.node_id, "task": op.task}
    if isinstance(op, SetAgent):
        return {"op": "set_agent", "id": op.node_id, "agent_name": op.agent.value}
    if isinstance(op, SetInputs):
        return {
            "op": "set_inputs",
            "id": op.node_id,
            "input": [{"variable": b.variable, "value": b.value} for b in op.inputs],
        }
    if isinstance(op, SetOutputs):
        return {"op": "set_outputs", "id": op.node_id, "output": list(op.outputs)}
    if isinstance(op, AddEdge):
        return {"op": "add_edge", "edge": edge_to_doc(op.edge)}
    if isinstance(op, DeleteEdge):
        return {"op": "delete_edge", "edge": edge_to_doc(op.edge)}
    if isinstance(op, MergeNodes):
        return {
            "op": "merge_nodes",
            "node_ids": sorted(op.node_ids),
            "merged": _spec_to_doc(op.merged),
        }
    if isinstance(op, SplitNode):
        return {
            "op": "split_node",
            "id": op.node_id,
            "mode": op.mode.value,
            "first": _spec_to_doc(op.first),
            "second": _spec_to_doc(op.second),
        }
    raise EditError("invalid-op", f"unsupported op {type(op).__name__}")


def _require_int(doc: dict, key: str, where: str) -> int:
    value = doc.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError("malformed-document", f"{where}.{key} must be an integer")
    return value


def op_from_doc(doc: Any) -> EditOp:
    if not isinstance(doc, dict) or not isinstance(doc.get("op"), str):
        raise ParseError("malformed-document", "edit op must be a tagged object")
    tag = doc["op"]
    where = f"op {tag}"
    if tag == "add_node":
        return AddNode(spec=_spec_from_doc(doc.get("node"), where))
    if tag == "delete_node":
        return DeleteNode(node_id=_require_int(doc, "id", where))
    if tag == "duplicate_node":
        return DuplicateNode(node_id=_require_int(doc, "id", where))
    if tag == "set_task":
        task = doc.get("task")
        if not isinstance(task, str):
            raise ParseError("malformed-document", f"{where}.task must be str")
        return SetTask(node_id=_require_int(doc, "id", where), task=task)
    if tag == "set_agent":
        return SetAgent(
            node_id=_require_int(doc, "id", where),
            agent=_parse_agent(doc.get("agent_name"), where),
        )
    if tag == "set_inputs":
        spec = _spec_from_doc(
            {"task": "", "agent_name": "math", "input": doc.get("input", [])}, where
        )
        return SetInputs(node_id=_require_int(doc, "id", where), inputs=spec.inputs)
    if tag == "set_outputs":
        outputs = doc.get("output")
        if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
            raise ParseError("malformed-document", f"{where}.output must be a list of str")
        return SetOutputs(node_id=_require_int(doc, "id", where), outputs=tuple(outputs))
    if tag == "add_edge":
        return AddEdge(edge=edge_from_doc(doc.get("edge"), where))
    if tag == "delete_edge":
        return DeleteEdge(edge=edge_from_doc(doc.get("edge"), where))
    if tag == "merge_nodes":
        ids = doc.get("node_ids")
        if not isinstance(ids, list) or not all(
            isinstance(i, int) and not isinstance(i, bool) for i in ids
        ):
            raise ParseError("malformed-document", f"{where}.node_ids must be a list of int")
        return MergeNodes(
            node_ids=frozenset(ids), merged=_spec_from_doc(doc.get("merged"), where)
        )
    if tag == "split_node":
        mode_raw = doc.get("mode")
        try:
            mode = SplitMode(mode_raw)
        except ValueError:
            raise ParseError(
                "malformed-document", f"{where}.mode must be sequential or parallel"
            ) from None
        return SplitNode(
            node_id=_require_int(doc, "id", where),
            first=_spec_from_doc(doc.get("first"), where),
            second=_spec_from_doc(doc.get("second"), where),
            mode=mode,
        )
    raise ParseError("malformed-document", f"unknown op tag {tag!r}")


def sequence_to_docs(ops: Iterable[EditOp]) -> list[dict[str, Any]]:
    return [op_to_doc(op) for op in ops]


def sequence_from_docs(docs: Iterable[Any]) -> EditSequence:
    return tuple(op_from_doc(d) for d in docs)

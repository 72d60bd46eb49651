"""Plan wire format.

A plan document is a UTF-8 JSON object with a ``nodes`` array and an
``edges`` array. Node objects use the field names ``id``, ``task``,
``agent_name``, ``input`` (list of ``{variable, value}``), ``output``, and
``prereq``; edge objects use ``src_node``, ``dest_node``, ``src_output``,
``dest_input``. ``prereq`` is always emitted from the edge set and ignored on
parse, since it is derived data. Execution state and the id counter are
carried in optional extra fields so that an executed plan survives a
round-trip byte-exactly.
"""

from __future__ import annotations

import json
from typing import Any

from .model import (
    AgentKind,
    ExecutionTrace,
    NodeStatus,
    Plan,
    PlanEdge,
    PlanNode,
    VarBinding,
    make_plan,
)


class ParseError(ValueError):
    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


def node_to_doc(plan: Plan, node: PlanNode) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "id": node.id,
        "task": node.task,
        "agent_name": node.agent.value,
        "input": [{"variable": b.variable, "value": b.value} for b in node.inputs],
        "output": list(node.outputs),
        "prereq": list(plan.prereq_of(node.id)),
    }
    if node.status is not NodeStatus.PENDING:
        doc["status"] = node.status.value
    if node.trace is not None:
        doc["trace"] = {
            "agent": node.trace.agent.value,
            "raw_log": node.trace.raw_log,
            "structured": dict(node.trace.structured),
            "values": dict(node.trace.values),
        }
    return doc


def edge_to_doc(edge: PlanEdge) -> dict[str, Any]:
    return {
        "src_node": edge.src_node,
        "dest_node": edge.dest_node,
        "src_output": edge.src_output,
        "dest_input": edge.dest_input,
    }


def plan_to_doc(plan: Plan) -> dict[str, Any]:
    return {
        "nodes": [node_to_doc(plan, n) for n in plan.nodes.values()],
        "edges": [edge_to_doc(e) for e in plan.edges],
        "next_id": plan.next_id,
    }


def serialize_plan(plan: Plan) -> str:
    return json.dumps(plan_to_doc(plan), ensure_ascii=False, indent=2) + "\n"


def _require(doc: Any, key: str, kind: type, where: str) -> Any:
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError("malformed-document", f"{where} is missing field {key!r}")
    value = doc[key]
    if kind is int and isinstance(value, bool):
        raise ParseError("malformed-document", f"{where}.{key} must be an integer")
    if not isinstance(value, kind):
        raise ParseError(
            "malformed-document", f"{where}.{key} must be {kind.__name__}"
        )
    return value


def _parse_agent(name: Any, where: str) -> AgentKind:
    if not isinstance(name, str):
        raise ParseError("malformed-document", f"{where}.agent_name must be str")
    try:
        return AgentKind(name)
    except ValueError:
        raise ParseError(
            "unknown-agent-name", f"{where} names unknown agent {name!r}"
        ) from None


def _parse_trace(doc: Any, where: str) -> ExecutionTrace:
    agent = _parse_agent(_require(doc, "agent", str, where), where)
    raw_log = doc.get("raw_log", "")
    structured = doc.get("structured", {})
    values = doc.get("values", {})
    if not isinstance(raw_log, str) or not isinstance(structured, dict) or not isinstance(values, dict):
        raise ParseError("malformed-document", f"{where} trace fields have wrong types")
    return ExecutionTrace(agent=agent, raw_log=raw_log, structured=structured, values=values)


def node_from_doc(doc: Any, where: str = "node") -> PlanNode:
    node_id = _require(doc, "id", int, where)
    where = f"node {node_id}"
    task = _require(doc, "task", str, where)
    agent = _parse_agent(doc.get("agent_name"), where)
    inputs = []
    for k, item in enumerate(_require(doc, "input", list, where)):
        variable = _require(item, "variable", str, f"{where}.input[{k}]")
        value = item.get("value", "")
        if not isinstance(value, str):
            raise ParseError(
                "malformed-document", f"{where}.input[{k}].value must be str"
            )
        inputs.append(VarBinding(variable=variable, value=value))
    outputs = []
    for k, item in enumerate(_require(doc, "output", list, where)):
        if not isinstance(item, str):
            raise ParseError("malformed-document", f"{where}.output[{k}] must be str")
        outputs.append(item)
    status = NodeStatus.PENDING
    if "status" in doc:
        try:
            status = NodeStatus(doc["status"])
        except ValueError:
            raise ParseError(
                "malformed-document", f"{where} has unknown status {doc['status']!r}"
            ) from None
    trace = _parse_trace(doc["trace"], where) if doc.get("trace") is not None else None
    return PlanNode(
        id=node_id,
        task=task,
        agent=agent,
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        status=status,
        trace=trace,
    )


def edge_from_doc(doc: Any, where: str = "edge") -> PlanEdge:
    return PlanEdge(
        src_node=_require(doc, "src_node", int, where),
        dest_node=_require(doc, "dest_node", int, where),
        src_output=_require(doc, "src_output", str, where),
        dest_input=_require(doc, "dest_input", str, where),
    )


def plan_from_doc(doc: Any) -> Plan:
    if not isinstance(doc, dict):
        raise ParseError("malformed-document", "top level must be a JSON object")
    nodes = []
    seen_ids: set[int] = set()
    for k, node_doc in enumerate(_require(doc, "nodes", list, "document")):
        node = node_from_doc(node_doc, where=f"nodes[{k}]")
        if node.id in seen_ids:
            raise ParseError("duplicate-id", f"node id {node.id} appears twice")
        seen_ids.add(node.id)
        nodes.append(node)
    edges = [
        edge_from_doc(e, where=f"edges[{k}]")
        for k, e in enumerate(_require(doc, "edges", list, "document"))
    ]
    next_id = doc.get("next_id")
    if next_id is not None and (isinstance(next_id, bool) or not isinstance(next_id, int)):
        raise ParseError("malformed-document", "next_id must be an integer")
    return make_plan(nodes, edges, next_id=next_id)


def parse_plan(text: str | bytes) -> Plan:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("malformed-document", f"not valid UTF-8: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("malformed-document", f"not valid JSON: {exc}") from None
    return plan_from_doc(doc)

"""Plan execution over pluggable per-agent executors.

The built-in executors are deterministic and offline: the math executor
evaluates ``{{expr: ...}}`` templates embedded in task text against bound
numeric inputs, and the search, code, and commonsense executors answer from a
fixture table keyed by normalized task text. Output values are cached on the
node's trace; re-running a fully executed plan is a no-op.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from typing import Any, Mapping, Protocol

from .expreval import ExpressionError, evaluate
from .graph import descendants, topo_order
from .model import (
    AgentKind,
    ExecutionTrace,
    NodeStatus,
    Plan,
    PlanNode,
    make_plan,
)
from .validate import ValidationLevel, ValidationReport, validate_plan

EXPR_MARKER_RE = re.compile(
    r"\{\{expr(?:\s+(?P<name>[a-z][a-z0-9_]*))?\s*:\s*(?P<body>[^{}]*?)\s*\}\}"
)


class ExecutionFailure(Exception):
    """The agent ran and failed; the node is marked failed."""

    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


class UnboundVariableError(ValueError):
    """A referenced variable has no binding; the plan itself is wrong."""

    def __init__(self, variable: str, detail: str):
        super().__init__(detail)
        self.variable = variable


class DependencyError(ValueError):
    """A node was asked to run before its producers succeeded."""

    def __init__(self, node_id: int, pending: tuple[int, ...]):
        super().__init__(
            f"node {node_id} depends on nodes {list(pending)} that have not succeeded"
        )
        self.node_id = node_id
        self.pending = pending


class InvalidPlanError(ValueError):
    def __init__(self, report: ValidationReport):
        codes = ", ".join(sorted(set(report.codes())))
        super().__init__(f"plan is not executable: {codes}")
        self.report = report


class AgentExecutor(Protocol):
    kind: AgentKind

    def run(
        self, task: str, bindings: Mapping[str, Any], expected_outputs: tuple[str, ...]
    ) -> tuple[dict[str, Any], dict[str, Any], str]:
        """Return (values, structured trace fields, raw log)."""
        ...


def normalize_task(text: str) -> str:
    """Key for fixture lookup: lowercased, whitespace-collapsed, no final punctuation."""
    return " ".join(text.lower().split()).rstrip(" .?!")


def _numeric(value: Any) -> float | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return None
    return None


@dataclass
class MathExecutor:
    """Evaluates ``{{expr: ...}}`` or ``{{expr name: ...}}`` task templates."""

    kind: AgentKind = AgentKind.MATH

    def run(
        self, task: str, bindings: Mapping[str, Any], expected_outputs: tuple[str, ...]
    ) -> tuple[dict[str, Any], dict[str, Any], str]:
        markers = [(m.group("name"), m.group("body")) for m in EXPR_MARKER_RE.finditer(task)]
        if not markers:
            raise ExecutionFailure("no-expression", "task has no {{expr: ...}} template")
        env = {
            name: num
            for name, value in bindings.items()
            if (num := _numeric(value)) is not None
        }

        expressions: dict[str, str] = {}
        if len(markers) == 1 and markers[0][0] is None:
            if len(expected_outputs) != 1:
                raise ExecutionFailure(
                    "expression-mismatch",
                    f"unnamed expression but {len(expected_outputs)} outputs expected",
                )
            expressions[expected_outputs[0]] = markers[0][1]
        else:
            for name, body in markers:
                if name is None:
                    raise ExecutionFailure(
                        "expression-mismatch",
                        "mixing unnamed and named expressions is not supported",
                    )
                expressions[name] = body
            missing = [o for o in expected_outputs if o not in expressions]
            if missing:
                raise ExecutionFailure(
                    "expression-mismatch", f"no expression for outputs {missing}"
                )

        values: dict[str, Any] = {}
        for name in expected_outputs:
            try:
                values[name] = evaluate(expressions[name], env)
            except ExpressionError as exc:
                if exc.code == "unbound-variable":
                    variable = exc.detail.split("'")[1] if "'" in exc.detail else ""
                    raise UnboundVariableError(variable, str(exc)) from None
                raise ExecutionFailure(exc.code, exc.detail) from None
        structured = {"expressions": dict(expressions), "environment": env}
        raw_log = "; ".join(f"{k} = {expressions[k]} = {values[k]}" for k in expected_outputs)
        return values, structured, raw_log


@dataclass
class FixtureExecutor:
    """Answers from a table of normalized task text to output values."""

    kind: AgentKind
    table: Mapping[str, Mapping[str, Any]]

    def run(
        self, task: str, bindings: Mapping[str, Any], expected_outputs: tuple[str, ...]
    ) -> tuple[dict[str, Any], dict[str, Any], str]:
        key = normalize_task(task)
        entry = self.table.get(key)
        if entry is None:
            raise ExecutionFailure("fixture-miss", f"no fixture for task {key!r}")
        missing = [o for o in expected_outputs if o not in entry]
        if missing:
            raise ExecutionFailure(
                "fixture-miss", f"fixture for {key!r} lacks outputs {missing}"
            )
        values = {o: entry[o] for o in expected_outputs}
        summary = json.dumps(values, ensure_ascii=False, sort_keys=True)
        if self.kind is AgentKind.SEARCH:
            structured: dict[str, Any] = {
                "query": task,
                "results": [summary],
                "summary": summary,
            }
        elif self.kind is AgentKind.CODE:
            structured = {"program": f"# fixture lookup for: {task}", "stdout": summary}
        else:
            structured = {"reasoning": f"fixture lookup for: {task}", "answer": summary}
        return values, structured, summary


def build_executors(
    fixtures: Mapping[str, Mapping[str, Any]] | None = None
) -> dict[AgentKind, AgentExecutor]:
    table = {normalize_task(k): v for k, v in (fixtures or {}).items()}
    return {
        AgentKind.MATH: MathExecutor(),
        AgentKind.SEARCH: FixtureExecutor(AgentKind.SEARCH, table),
        AgentKind.CODE: FixtureExecutor(AgentKind.CODE, table),
        AgentKind.COMMONSENSE: FixtureExecutor(AgentKind.COMMONSENSE, table),
    }


@dataclass(frozen=True)
class ResultBundle:
    sink_id: int
    values: Mapping[str, Any]
    statuses: Mapping[int, NodeStatus]


def _bind_inputs(plan: Plan, node: PlanNode) -> dict[str, Any]:
    incoming = plan.incoming(node.id)
    pending: list[int] = []
    bindings: dict[str, Any] = {}
    for b in node.inputs:
        if b.value != "":
            bindings[b.variable] = b.value
            continue
        feeders = [e for e in incoming if e.dest_input == b.variable]
        if not feeders:
            continue
        edge = feeders[0]
        producer = plan.nodes.get(edge.src_node)
        if producer is None or producer.status is not NodeStatus.SUCCEEDED:
            pending.append(edge.src_node)
            continue
        if producer.trace is None or edge.src_output not in producer.trace.values:
            raise ExecutionFailure(
                "missing-upstream-value",
                f"node {producer.id} succeeded without producing {edge.src_output!r}",
            )
        bindings[b.variable] = producer.trace.values[edge.src_output]
    if pending:
        raise DependencyError(node.id, tuple(sorted(set(pending))))
    return bindings


def _run_node(
    plan: Plan, node: PlanNode, executors: Mapping[AgentKind, AgentExecutor]
) -> PlanNode:
    executor = executors.get(node.agent)
    if executor is None:
        raise KeyError(f"no executor configured for agent {node.agent.value!r}")
    try:
        bindings = _bind_inputs(plan, node)
        values, structured, raw_log = executor.run(node.task, bindings, node.outputs)
    except ExecutionFailure as exc:
        trace = ExecutionTrace(
            agent=node.agent,
            raw_log=str(exc),
            structured={"error": exc.code},
            values={},
        )
        return replace(node, status=NodeStatus.FAILED, trace=trace)
    trace = ExecutionTrace(
        agent=node.agent, raw_log=raw_log, structured=structured, values=values
    )
    return replace(node, status=NodeStatus.SUCCEEDED, trace=trace)


def execute_node(
    plan: Plan, node_id: int, executors: Mapping[AgentKind, AgentExecutor]
) -> Plan:
    """Run one node. Producers of its edge-fed inputs must have succeeded."""
    node = plan.node(node_id)
    executed = _run_node(plan, node, executors)
    nodes = dict(plan.nodes)
    nodes[node_id] = executed
    return make_plan(nodes.values(), plan.edges, next_id=plan.next_id)


def execute_all(
    plan: Plan, executors: Mapping[AgentKind, AgentExecutor]
) -> tuple[Plan, ResultBundle | None]:
    """Run every non-succeeded node in topological order.

    A failure marks all data-dependent descendants failed without running
    them; independent branches still execute. The result bundle is present
    only when the sink succeeded.
    """
    report = validate_plan(plan, ValidationLevel.EXECUTABLE)
    if not report.ok:
        raise InvalidPlanError(report)

    current = plan
    failed: set[int] = set()
    for node_id in topo_order(plan):
        node = current.nodes[node_id]
        producers = {e.src_node for e in current.incoming(node_id)}
        if producers & failed:
            upstream = sorted(producers & failed)
            trace = ExecutionTrace(
                agent=node.agent,
                raw_log=f"not run: upstream failure in nodes {upstream}",
                structured={"error": "failed-by-dependency", "failed_upstream": upstream},
                values={},
            )
            nodes = dict(current.nodes)
            nodes[node_id] = replace(node, status=NodeStatus.FAILED, trace=trace)
            current = make_plan(nodes.values(), current.edges, next_id=current.next_id)
            failed.add(node_id)
            continue
        if node.status is NodeStatus.SUCCEEDED:
            continue
        current = execute_node(current, node_id, executors)
        if current.nodes[node_id].status is NodeStatus.FAILED:
            failed.add(node_id)

    sink_id = current.sink_ids()[0]
    sink = current.nodes[sink_id]
    bundle = None
    if sink.status is NodeStatus.SUCCEEDED and sink.trace is not None:
        bundle = ResultBundle(
            sink_id=sink_id,
            values=dict(sink.trace.values),
            statuses={i: n.status for i, n in current.nodes.items()},
        )
    return current, bundle


def invalidate_downstream(plan: Plan, node_id: int) -> Plan:
    """Mark the node and every succeeded descendant stale; others untouched."""
    plan.node(node_id)
    affected = {node_id} | set(descendants(plan, node_id))
    nodes = dict(plan.nodes)
    for i in affected:
        node = nodes[i]
        if node.status is NodeStatus.SUCCEEDED:
            nodes[i] = replace(node, status=NodeStatus.STALE)
    return make_plan(nodes.values(), plan.edges, next_id=plan.next_id)

"""Plan validation.

Two levels exist because an interactive editor must tolerate mid-edit states:
``draft`` is the floor every stored plan satisfies, ``executable`` is the bar
for running one. Violations are reported as data rather than raised, so
callers can render them or gate on them as they see fit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .graph import is_acyclic
from .model import IDENT_RE, Plan


class ValidationLevel(str, Enum):
    DRAFT = "draft"
    EXECUTABLE = "executable"


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str
    node_ids: tuple[int, ...] = ()
    variable: str | None = None


@dataclass(frozen=True)
class ValidationReport:
    level: ValidationLevel
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> tuple[str, ...]:
        return tuple(v.code for v in self.violations)


def _draft_violations(plan: Plan) -> list[Violation]:
    out: list[Violation] = []
    if not is_acyclic(plan):
        out.append(Violation("cycle-detected", "plan contains a dependency cycle"))

    for node in plan.nodes.values():
        seen_inputs: set[str] = set()
        for binding in node.inputs:
            if not IDENT_RE.match(binding.variable):
                out.append(
                    Violation(
                        "var-name-invalid",
                        f"input variable {binding.variable!r} on node {node.id} is not snake_case",
                        node_ids=(node.id,),
                        variable=binding.variable,
                    )
                )
            if binding.variable in seen_inputs:
                out.append(
                    Violation(
                        "input-duplicate",
                        f"node {node.id} declares input {binding.variable!r} twice",
                        node_ids=(node.id,),
                        variable=binding.variable,
                    )
                )
            seen_inputs.add(binding.variable)
        seen_outputs: set[str] = set()
        for name in node.outputs:
            if not IDENT_RE.match(name):
                out.append(
                    Violation(
                        "var-name-invalid",
                        f"output {name!r} on node {node.id} is not snake_case",
                        node_ids=(node.id,),
                        variable=name,
                    )
                )
            if name in seen_outputs:
                out.append(
                    Violation(
                        "output-duplicate",
                        f"node {node.id} declares output {name!r} twice",
                        node_ids=(node.id,),
                        variable=name,
                    )
                )
            seen_outputs.add(name)

    seen_edges = set()
    for e in plan.edges:
        if e in seen_edges:
            out.append(
                Violation(
                    "edge-duplicate",
                    f"edge {e.src_node}->{e.dest_node} ({e.src_output}->{e.dest_input}) appears twice",
                    node_ids=(e.src_node, e.dest_node),
                )
            )
        seen_edges.add(e)
        missing = [i for i in (e.src_node, e.dest_node) if not plan.has_node(i)]
        if missing:
            out.append(
                Violation(
                    "edge-endpoint-unknown",
                    f"edge {e.src_node}->{e.dest_node} references unknown node ids {missing}",
                    node_ids=tuple(missing),
                )
            )
            continue
        src = plan.nodes[e.src_node]
        dest = plan.nodes[e.dest_node]
        if e.src_output not in src.outputs:
            out.append(
                Violation(
                    "edge-var-unknown",
                    f"edge {e.src_node}->{e.dest_node} uses {e.src_output!r}, not an output of node {e.src_node}",
                    node_ids=(e.src_node,),
                    variable=e.src_output,
                )
            )
        if e.dest_input not in dest.input_names():
            out.append(
                Violation(
                    "edge-var-unknown",
                    f"edge {e.src_node}->{e.dest_node} targets {e.dest_input!r}, not an input of node {e.dest_node}",
                    node_ids=(e.dest_node,),
                    variable=e.dest_input,
                )
            )
    return out


def _executable_violations(plan: Plan) -> list[Violation]:
    out: list[Violation] = []
    for node in plan.nodes.values():
        if node.id <= 0:
            out.append(
                Violation(
                    "id-not-positive",
                    f"node id {node.id} is reserved for planner drafts",
                    node_ids=(node.id,),
                )
            )
        if not node.outputs:
            out.append(
                Violation(
                    "no-outputs",
                    f"node {node.id} declares no outputs",
                    node_ids=(node.id,),
                )
            )

    isolated = plan.isolated_ids()
    if len(plan.nodes) > 1:
        for i in isolated:
            out.append(
                Violation("isolated-node", f"node {i} has no edges", node_ids=(i,))
            )

    sinks = plan.sink_ids()
    if not plan.nodes:
        out.append(Violation("no-sink", "plan is empty"))
    elif len(sinks) == 0:
        out.append(Violation("no-sink", "plan has no sink node"))
    elif len(sinks) > 1:
        out.append(
            Violation(
                "multi-sink",
                f"plan has {len(sinks)} sink nodes {sorted(sinks)}",
                node_ids=tuple(sorted(sinks)),
            )
        )

    for node in plan.nodes.values():
        feeders: dict[str, int] = {}
        for e in plan.incoming(node.id):
            feeders[e.dest_input] = feeders.get(e.dest_input, 0) + 1
        for binding in node.inputs:
            if binding.value != "":
                continue
            count = feeders.get(binding.variable, 0)
            if count == 0:
                out.append(
                    Violation(
                        "unbound-input",
                        f"input {binding.variable!r} on node {node.id} has no value and no feeding edge",
                        node_ids=(node.id,),
                        variable=binding.variable,
                    )
                )
            elif count > 1:
                out.append(
                    Violation(
                        "input-multi-fed",
                        f"input {binding.variable!r} on node {node.id} is fed by {count} edges",
                        node_ids=(node.id,),
                        variable=binding.variable,
                    )
                )
    return out


def validate_plan(
    plan: Plan, level: ValidationLevel = ValidationLevel.DRAFT
) -> ValidationReport:
    violations = _draft_violations(plan)
    if level is ValidationLevel.EXECUTABLE:
        violations.extend(_executable_violations(plan))
    return ValidationReport(level=level, violations=tuple(violations))


def is_draft_valid(plan: Plan) -> bool:
    return validate_plan(plan, ValidationLevel.DRAFT).ok


def is_executable(plan: Plan) -> bool:
    return validate_plan(plan, ValidationLevel.EXECUTABLE).ok

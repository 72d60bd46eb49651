"""Core value types for plan DAGs.

A plan is a directed acyclic graph of agent subtasks. Nodes carry a natural
language task, an agent assignment, and named input/output variables; edges
wire one node's output variable into another node's input variable. Plans are
immutable snapshots: every operation elsewhere in the package returns a new
``Plan`` value rather than mutating one in place.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping, NamedTuple

IDENT_RE = re.compile(r"[a-z][a-z0-9_]*\Z")


class AgentKind(str, Enum):
    CODE = "code"
    MATH = "math"
    SEARCH = "search"
    COMMONSENSE = "commonsense"


# Catalog entries shown to planner backends, one block per agent kind.
AGENT_DESCRIPTIONS: dict[AgentKind, str] = {
    AgentKind.CODE: """\
[code] For PURE coding tasks:
  - Implementing or modifying code to meet a spec (e.g., parse/transform text/JSON/CSV, write functions, simulate small programs, validate formats).
  - Algorithmic procedures best expressed as code (loops, data structures, regexes, parsing).
  - Debugging code or reorganizing/refactoring code.
  - NOT for mathematical derivations or symbolic reasoning. If a node mixes coding + math, split them: use [math] to derive, then [code] to implement.""",
    AgentKind.MATH: """\
[math] For mathematical reasoning nodes:
  - Solving sub-problems in math: derive formulas, manipulate expressions, do case analysis, solve equations/inequalities, compute with given numbers.
  - Identify and restate conditions/variables; produce machine-evaluable expressions or numeric results where inputs are available.
  - Do NOT write or reason about code here. Keep it math-only.
  - The task MUST be a variable-template instruction (no concrete numbers). Use variable names only.
  - Never include numeric literals, percent symbols (%), or currency symbols in the task text.
  - Every variable listed in "variables" field in the input list MUST appear verbatim in the task description text.
  - The task description MUST NOT reference any other nodes.
  - For [math] nodes:
    * For each v in variables field in the input list, the task MUST contain v as a standalone token (exact match).
    * Reject tasks where a near-variant appears (e.g., "total sale") instead of the exact variable name (e.g., total_sales).
    * If a quantity is needed but not bound, create an upstream node to bind it to a properly named variable, then reference that exact name.""",
    AgentKind.SEARCH: """\
[search] For retrieving specific factual knowledge from the Web (history, sports, culture, geography, medicine, science, etc.).""",
    AgentKind.COMMONSENSE: """\
[commonsense] For everyday reasoning that does not require Web retrieval (e.g., comparing magnitudes, widely-known facts, straightforward logical checks).""",
}


class NodeStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"
    STALE = "stale"


@dataclass(frozen=True)
class VarBinding:
    """A named input slot; an empty value means the slot is fed by an edge."""

    variable: str
    value: str = ""


@dataclass(frozen=True)
class ExecutionTrace:
    """Record of one node execution.

    ``structured`` holds agent-specific fields (for math: the evaluated
    expression; for search: query and results; and so on). ``values`` maps
    each produced output variable to its runtime value.
    """

    agent: AgentKind
    raw_log: str = ""
    structured: Mapping[str, Any] = field(default_factory=dict)
    values: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class PlanNode:
    """One agent subtask.

    Prerequisites are never stored: they are derived from incoming edges via
    ``Plan.prereq_of`` so the two can never drift apart. Negative ids are
    permitted only inside planner draft output; committed plans use positive
    ids.
    """

    id: int
    task: str
    agent: AgentKind
    inputs: tuple[VarBinding, ...] = ()
    outputs: tuple[str, ...] = ()
    status: NodeStatus = NodeStatus.PENDING
    trace: ExecutionTrace | None = None

    def input_names(self) -> tuple[str, ...]:
        return tuple(b.variable for b in self.inputs)

    def unbound_input_names(self) -> tuple[str, ...]:
        return tuple(b.variable for b in self.inputs if b.value == "")


@dataclass(frozen=True)
class PlanEdge:
    """A data dependency: src_node's output variable feeds dest_node's input."""

    src_node: int
    dest_node: int
    src_output: str
    dest_input: str

    def sort_key(self) -> tuple[int, int, str, str]:
        return (self.src_node, self.dest_node, self.src_output, self.dest_input)


@dataclass(frozen=True)
class Plan:
    nodes: dict[int, PlanNode]
    edges: tuple[PlanEdge, ...]
    next_id: int

    def node(self, node_id: int) -> PlanNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id}") from None

    def has_node(self, node_id: int) -> bool:
        return node_id in self.nodes

    def node_ids(self) -> tuple[int, ...]:
        return tuple(self.nodes)

    def incoming(self, node_id: int) -> tuple[PlanEdge, ...]:
        return tuple(e for e in self.edges if e.dest_node == node_id)

    def outgoing(self, node_id: int) -> tuple[PlanEdge, ...]:
        return tuple(e for e in self.edges if e.src_node == node_id)

    def prereq_of(self, node_id: int) -> tuple[int, ...]:
        """Distinct source ids of incoming edges, ascending."""
        return tuple(sorted({e.src_node for e in self.incoming(node_id)}))

    def sink_ids(self) -> tuple[int, ...]:
        with_out = {e.src_node for e in self.edges}
        return tuple(i for i in self.nodes if i not in with_out)

    def source_ids(self) -> tuple[int, ...]:
        with_in = {e.dest_node for e in self.edges}
        return tuple(i for i in self.nodes if i not in with_in)

    def isolated_ids(self) -> tuple[int, ...]:
        touched = {e.src_node for e in self.edges} | {e.dest_node for e in self.edges}
        return tuple(i for i in self.nodes if i not in touched)


def make_plan(
    nodes: Iterable[PlanNode],
    edges: Iterable[PlanEdge] = (),
    next_id: int | None = None,
) -> Plan:
    """Build a plan in canonical form: nodes ascending by id, edges sorted.

    ``next_id`` is clamped so it always exceeds every committed (positive)
    node id. Duplicate node ids are a construction fault, not a validation
    finding, because the id-keyed node map cannot represent them.
    """
    node_list = sorted(nodes, key=lambda n: n.id)
    node_map: dict[int, PlanNode] = {}
    for n in node_list:
        if n.id in node_map:
            raise ValueError(f"duplicate node id {n.id}")
        node_map[n.id] = n
    max_pos = max((i for i in node_map if i > 0), default=0)
    floor = max_pos + 1
    if next_id is None or next_id < floor:
        next_id = floor
    return Plan(nodes=node_map, edges=tuple(sorted(edges, key=PlanEdge.sort_key)), next_id=next_id)


def empty_plan() -> Plan:
    return Plan(nodes={}, edges=(), next_id=1)


def node_data_equal(a: PlanNode, b: PlanNode) -> bool:
    """Compare authored node content, ignoring execution state."""
    return (
        a.id == b.id
        and a.task == b.task
        and a.agent == b.agent
        and a.inputs == b.inputs
        and a.outputs == b.outputs
    )


def reset_node(node: PlanNode) -> PlanNode:
    return replace(node, status=NodeStatus.PENDING, trace=None)


@dataclass(frozen=True)
class SubgraphSelection:
    node_ids: frozenset[int]

    def __post_init__(self) -> None:
        if not self.node_ids:
            raise ValueError("selection must be non-empty")


def selection_of(node_ids: Iterable[int]) -> SubgraphSelection:
    return SubgraphSelection(node_ids=frozenset(node_ids))


class InboundLink(NamedTuple):
    """An edge crossing into the selection, minus its internal endpoint."""

    src_node: int
    src_output: str
    dest_input: str


class OutboundLink(NamedTuple):
    """An edge crossing out of the selection, minus its internal endpoint."""

    src_output: str
    dest_node: int
    dest_input: str


@dataclass(frozen=True)
class BoundaryInterface:
    """The selection's contract with the rest of the plan.

    Entries are deduplicated and canonically sorted, so two interfaces are
    semantically equal exactly when they compare equal. Internal endpoints are
    deliberately absent: replanning a selection replaces them, while the
    interface itself must stay fixed.
    """

    inbound: tuple[InboundLink, ...]
    outbound: tuple[OutboundLink, ...]

    def inbound_variables(self) -> tuple[str, ...]:
        return tuple(sorted({link.dest_input for link in self.inbound}))

    def outbound_variables(self) -> tuple[str, ...]:
        return tuple(sorted({link.src_output for link in self.outbound}))


def make_boundary(
    inbound: Iterable[InboundLink], outbound: Iterable[OutboundLink]
) -> BoundaryInterface:
    return BoundaryInterface(
        inbound=tuple(sorted(set(inbound))),
        outbound=tuple(sorted(set(outbound), key=lambda o: (o.dest_node, o.src_output, o.dest_input))),
    )


@dataclass(frozen=True)
class DiffSummary:
    nodes_added: tuple[int, ...]
    nodes_removed: tuple[int, ...]
    nodes_modified: tuple[int, ...]
    edges_added: int
    edges_removed: int
    text: str

    @property
    def is_empty(self) -> bool:
        return not (
            self.nodes_added
            or self.nodes_removed
            or self.nodes_modified
            or self.edges_added
            or self.edges_removed
        )

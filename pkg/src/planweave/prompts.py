"""Prompt assembly for the planner backends.

Every template is a fixed string; the only variation comes from the payload
fields spliced into the user message, so a given (kind, payload) pair always
produces byte-identical text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping

from .model import AGENT_DESCRIPTIONS, AgentKind, BoundaryInterface, Plan
from .serialize import plan_to_doc


class PromptError(ValueError):
    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


class PromptKind(str, Enum):
    GENERATE = "generate"
    REPLAN = "replan"
    SUBGRAPH_REPLAN = "subgraph_replan"
    AUTO_MERGE = "auto_merge"
    AUTO_SPLIT = "auto_split"


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str

    @property
    def text(self) -> str:
        return self.system + "\n\n" + self.user


_AGENT_CATALOG = "\n\n".join(
    AGENT_DESCRIPTIONS[kind]
    for kind in (AgentKind.CODE, AgentKind.MATH, AgentKind.SEARCH, AgentKind.COMMONSENSE)
)

GENERATION_SYSTEM_PROMPT = (
    "You are an expert at breaking down tasks for planning.\n"
    "You will only have access to these agents:\n"
    "\n"
    + _AGENT_CATALOG
    + "\n"
    "\n"
    "====================\n"
    "GLOBAL INSTRUCTIONS\n"
    "====================\n"
    "Given a complex question or task, generate a structured, step-by-step plan to solve it.\n"
    "\n"
    "Each node MUST follow this JSON schema:\n"
    "{\n"
    '  "id": <int>,\n'
    '  "task": "<a complete, self-contained instruction using ONLY variable names'
    " from this node's inputs; never include discovered values.>\","
    " // Do not mention any other nodes in the task description!\n"
    '  "agent_name": "<agent_name>",    // choose exactly one agent; if more than'
    " one seems needed, split into multiple nodes\n"
    '  "input": [{"variable": "<variable_name>", "value": "<value>"}],'
    "  // bind given constants here; leave '' if unknown.\n"
    '  "output": ["<output_key>"],\n'
    '  "prereq": [<node_id_1>, <node_id_2>, ...]\n'
    "}\n"
    "\n"
    "Also output the dependency edges (a plan graph). Each edge indicates that an"
    " output from one node is used as an input name in another node:\n"
    "{\n"
    '  "src_node": <source node id>,\n'
    '  "dest_node": <destination node id>,\n'
    '  "src_output": "<output key from source>",\n'
    '  "dest_input": "<input key expected by destination>"\n'
    "}\n"
    "\n"
    "=============\n"
    "PLANNING RULES\n"
    "=============\n"
    "1) Break the problem into independent, atomic nodes.\n"
    "2) Each node is an INSTRUCTION only: describe what must be done, not the result.\n"
    "   - You may include constants ONLY if they appear explicitly in the original problem statement.\n"
    "   - Do not invent, look up, or leak unknown values into the plan; such values"
    " must be produced by earlier nodes or via [search].\n"
    "   - Do NOT mention any other nodes in the task description.\n"
    "   - Do NOT mention any other nodes in the task description.\n"
    "   - Do NOT mention any other nodes in the task description.\n"
    "3) A single agent must be able to complete each node using ONLY:\n"
    "   - the node's instruction,\n"
    "   - the specified agent, and\n"
    "   - outputs from its prereqs.\n"
    '4) Do NOT reference "the original question" inside nodes. Rewrite what\'s'
    " needed directly into each node's instruction.\n"
    '5) Use exactly one agent per node in the "agent_name" field. If multiple'
    " agents seem required, split the node.\n"
    "6) Include any necessary variable names directly in the instruction so the"
    " executing agent has everything it needs. Use snake_case for output variable names.\n"
    "7) Produce a valid DAG:\n"
    "   - No isolated nodes.\n"
    "   - A single sink node (the node with the highest id) is the final output node.\n"
    "8) Edges:\n"
    "   - Only create edges for actual data dependencies (where a later node's"
    " input name matches a prior node's output variable name).\n"
    "   - Every edge must point from an existing output to a named input expected"
    " by the destination node.\n"
)

SUBGRAPH_SYSTEM_PROMPT = (
    "You are an expert at re-planning sub-graphs in task planning DAGs.\n"
    "You will be given:\n"
    "1. A selected sub-graph (a set of nodes and connecting edges) as the focus for replanning.\n"
    "\n"
    "Your goal is to regenerate ONLY the selected sub-graph nodes, while keeping"
    " the interface (inputs/outputs defined by edges connecting to outside nodes)"
    " fully consistent.\n"
    "\n"
    "====================\n"
    "GLOBAL INSTRUCTIONS\n"
    "====================\n"
    "- Every new node generated inside the replanned sub-graph must use an id that"
    " is a negative integer.\n"
    "  (Examples: -1, -2, -3, ...).\n"
    "- Do NOT use the original numeric IDs for new nodes. Keep original IDs only"
    " for nodes outside the replanned sub-graph.\n"
    "- Maintain the same **input and output variables** on the boundary edges of"
    " the selected sub-graph so that upstream and downstream connections remain valid.\n"
    "- All **edges from/to nodes outside the sub-graph must remain unchanged** in terms of:\n"
    "  - Outside node IDs\n"
    "  - Variable names\n"
    "- Inside the replanned sub-graph you may:\n"
    "  - Add, remove, or restructure edges\n"
    "  - Split or merge tasks across nodes\n"
    "  - Introduce additional internal connections\n"
    "  as long as the boundary interface to outside nodes remains consistent.\n"
    "- Do not modify nodes or edges outside the selected sub-graph.\n"
    "\n"
    "Each replanned node must follow this JSON schema:\n"
    "{\n"
    '  "id": -1,   // Use negative integers (-1, -2, -3, ...) for all new nodes'
    " inside the replanned sub-graph\n"
    '  "task": "<a complete, self-contained instruction using ONLY this node\'s'
    ' input variables. Do not mention other nodes.>",\n'
    '  "agent_name": "<agent_name>",  // [code], [math], [search], or [commonsense]\n'
    '  "input": [{"variable": "<variable_name>", "value": "<value>"}],\n'
    '  "output": ["<output_key>"],\n'
    '  "prereq": [<id_of_other_node>, ...]  // Can be a negative ID (inside'
    " sub-graph) or an original node id (outside sub-graph)\n"
    "}\n"
    "\n"
    "Also output the dependency edges among the replanned sub-graph nodes:\n"
    "{\n"
    '  "src_node": <node id>,   // negative ID (-) if inside sub-graph, positive'
    " original ID if outside\n"
    '  "dest_node": <node id>,  // negative ID (-) if inside sub-graph, positive'
    " original ID if outside\n"
    '  "src_output": "<output key from source>",\n'
    '  "dest_input": "<input key expected by destination>"\n'
    "}\n"
    "\n"
    "=============\n"
    "PLANNING RULES\n"
    "=============\n"
    "1. **Boundary consistency:**\n"
    "   - Any variable appearing on incoming edges from outside the sub-graph must"
    " appear as an input in at least one replanned node.\n"
    "   - Any variable appearing on outgoing edges to outside the sub-graph must"
    " be produced as an output by at least one replanned node.\n"
    "   - Outside node IDs and boundary edge structures must remain exactly the same.\n"
    "\n"
    "2. **Atomic instructions:**\n"
    "   - Each node must remain atomic, executable by exactly one agent.\n"
    "   - Split tasks if multiple agent types would be required.\n"
    "\n"
    "3. **Self-contained tasks:**\n"
    '   - Node instructions must not reference other nodes or "the original question."\n'
    "   - Use variable names verbatim from inputs/outputs.\n"
    "\n"
    "4. **Valid DAG:**\n"
    "   - No isolated nodes.\n"
    "   - Exactly one sink node inside the replanned sub-graph.\n"
    "\n"
    "========================\n"
    "RESPONSE FORMAT (JSON)\n"
    "========================\n"
    "{\n"
    '  "nodes": [ <list of replanned node objects> ],\n'
    '  "edges": [ <list of replanned edge objects> ]\n'
    "}\n"
)

_INTERFACE_NOTE = (
    "Note: Must have the inputs/outputs interface defined by edges to connect"
    " to outside nodes."
)


def _plan_text(plan: Plan) -> str:
    return json.dumps(plan_to_doc(plan), indent=2, ensure_ascii=False)


def _boundary_text(boundary: BoundaryInterface) -> str:
    doc = {
        "inbound": [
            {"src_node": l.src_node, "src_output": l.src_output, "dest_input": l.dest_input}
            for l in boundary.inbound
        ],
        "outbound": [
            {"src_output": l.src_output, "dest_node": l.dest_node, "dest_input": l.dest_input}
            for l in boundary.outbound
        ],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False)


def _subgraph_block(subplan: Plan, boundary: BoundaryInterface) -> str:
    return (
        "Sub-graph Plan:\n"
        + _plan_text(subplan)
        + "\n\nBoundary Edges:\n"
        + _boundary_text(boundary)
    )


def _field(payload: Mapping[str, Any], name: str, kind: str) -> Any:
    if name not in payload or payload[name] is None:
        raise PromptError("missing-field", f"{kind} prompt requires '{name}'")
    return payload[name]


def prompt_parts(kind: PromptKind | str, payload: Mapping[str, Any]) -> PromptBundle:
    try:
        resolved = PromptKind(kind)
    except ValueError:
        raise PromptError("unknown-kind", f"no prompt kind named {kind!r}") from None

    if resolved is PromptKind.GENERATE:
        question = _field(payload, "question", resolved.value)
        return PromptBundle(system=GENERATION_SYSTEM_PROMPT, user=str(question))

    if resolved is PromptKind.REPLAN:
        plan = _field(payload, "plan", resolved.value)
        feedback = _field(payload, "feedback", resolved.value)
        history = payload.get("history") or ()
        history_text = "\n".join(str(line) for line in history) if history else "(none)"
        user = (
            "A plan and user feedback are given to you. Your job is to fix the"
            " plan according to the user feedback.\n"
            "\n"
            "Conversation History:\n"
            f"{history_text}\n"
            "\n"
            "Plan:\n"
            f"{_plan_text(plan)}\n"
            "\n"
            "User Feedback:\n"
            f"{feedback}"
        )
        return PromptBundle(system=GENERATION_SYSTEM_PROMPT, user=user)

    subplan = _field(payload, "subplan", resolved.value)
    boundary = _field(payload, "boundary", resolved.value)

    if resolved is PromptKind.SUBGRAPH_REPLAN:
        feedback = _field(payload, "feedback", resolved.value)
        context = payload.get("context")
        sections = [
            "A sub-graph plan and user feedback are given to you. You job is to"
            " revise the subplan based on user's feedback",
            _subgraph_block(subplan, boundary),
            f"User Feedback:\n{feedback}",
        ]
        if context is not None:
            sections.append(
                "Full Plan (context only, do not modify nodes outside the"
                " selected sub-graph):\n" + _plan_text(context)
            )
        sections.append(_INTERFACE_NOTE)
        return PromptBundle(system=SUBGRAPH_SYSTEM_PROMPT, user="\n\n".join(sections))

    if resolved is PromptKind.AUTO_SPLIT:
        lead = (
            "A sub-graph plan is given to you. You job is to split the sub-graph"
            " into a new plan.\n"
            "Keep the interface (inputs/outputs defined by edges connecting to"
            " outside nodes) fully consistent."
        )
    else:
        lead = (
            "A sub-graph plan is given to you. You job is to merge the sub-graph"
            " into EXACTLY ONE node.\n"
            "Keep the interface (inputs/outputs defined by edges connecting to"
            " outside nodes) fully consistent."
        )
    user = "\n\n".join([lead, _subgraph_block(subplan, boundary), _INTERFACE_NOTE])
    return PromptBundle(system=SUBGRAPH_SYSTEM_PROMPT, user=user)


def assemble_prompt(kind: PromptKind | str, payload: Mapping[str, Any]) -> str:
    """Render the full prompt (system and user message) as one text block."""
    return prompt_parts(kind, payload).text

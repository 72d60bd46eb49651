"""Splicing a revised subplan back into the untouched remainder of a plan.

A revised subplan arrives with negative ids on new nodes and positive ids on
nodes retained from the selection. Its edge list may either declare the
crossing edges explicitly (endpoints outside the selection) or omit them
entirely, in which case wiring is reconstructed from the recorded boundary
interface by matching variable names.

Two boundary policies exist. The frozen policy demands the revised subplan
consume exactly the inbound boundary variables and produce every outbound
one; any deviation fails with the offending variable names and the rest of
the plan is untouched by construction. The flexible policy drops inbound
links nobody consumes, leaves extra demands unbound, and rewires a vanished
outbound variable to a replacement output (exact name match on the external
consumer's input first, else the single unclaimed output), renaming the
external consumer's input binding when the replacement differs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .graph import is_acyclic
from .model import (
    BoundaryInterface,
    Plan,
    PlanEdge,
    PlanNode,
    SubgraphSelection,
    VarBinding,
    make_plan,
)
from .validate import ValidationLevel, validate_plan
from . import graph


class PolicyMode(str, Enum):
    FROZEN = "frozen"
    FLEXIBLE = "flexible"


@dataclass(frozen=True)
class ReintegrationPolicy:
    mode: PolicyMode = PolicyMode.FROZEN


FROZEN = ReintegrationPolicy(mode=PolicyMode.FROZEN)
FLEXIBLE = ReintegrationPolicy(mode=PolicyMode.FLEXIBLE)


class BoundaryMismatchError(Exception):
    """Frozen-interface violation; carries the offending variable names."""

    def __init__(self, variables: tuple[str, ...], detail: str):
        super().__init__(f"boundary-mismatch: {detail}")
        self.variables = variables
        self.detail = detail


class MalformedRevisionError(Exception):
    """The revised subplan itself is unusable (bad ids, cycles, bad edges)."""

    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


@dataclass(frozen=True)
class ReintegrationResult:
    plan: Plan
    id_map: dict[int, int]
    touched_external: tuple[int, ...]


def _demands(plan: Plan) -> dict[str, list[int]]:
    """Unbound input variables not fed by any internal edge, with demanders."""
    fed = {(e.dest_node, e.dest_input) for e in plan.edges}
    out: dict[str, list[int]] = {}
    for node in plan.nodes.values():
        for name in node.unbound_input_names():
            if (node.id, name) in fed:
                continue
            out.setdefault(name, []).append(node.id)
    return out


def _producers(plan: Plan) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {}
    for node in plan.nodes.values():
        for name in node.outputs:
            out.setdefault(name, []).append(node.id)
    return out


def reintegrate(
    p0: Plan,
    sel: SubgraphSelection,
    revised: Plan,
    policy: ReintegrationPolicy = FROZEN,
) -> ReintegrationResult:
    """Replace the selected subgraph of ``p0`` with ``revised``.

    Returns the assembled plan plus the negative-to-positive id mapping and
    the ids of external nodes whose content changed (flexible policy only).
    Raises BoundaryMismatchError, MalformedRevisionError, or graph.CycleError.
    """
    if not revised.nodes:
        raise MalformedRevisionError("empty-subplan", "revised subplan has no nodes")

    _, boundary = graph.induced_subgraph(p0, sel)
    rest = graph.remainder(p0, sel)

    for node_id in revised.nodes:
        if node_id > 0 and node_id not in sel.node_ids:
            raise MalformedRevisionError(
                "foreign-id", f"positive id {node_id} is not part of the selection"
            )

    internal_edges: list[PlanEdge] = []
    declared_crossing: list[PlanEdge] = []
    for e in revised.edges:
        src_in = revised.has_node(e.src_node)
        dest_in = revised.has_node(e.dest_node)
        if src_in and dest_in:
            internal_edges.append(e)
        elif src_in != dest_in:
            outside = e.dest_node if src_in else e.src_node
            if not rest.has_node(outside):
                raise MalformedRevisionError(
                    "unknown-endpoint", f"edge references unknown node {outside}"
                )
            declared_crossing.append(e)
        else:
            raise MalformedRevisionError(
                "unknown-endpoint",
                f"edge {e.src_node}->{e.dest_node} touches no revised node",
            )

    internal = make_plan(list(revised.nodes.values()), internal_edges)
    report = validate_plan(internal, ValidationLevel.DRAFT)
    if not report.ok:
        raise MalformedRevisionError(
            "draft-invalid", "; ".join(sorted(set(report.codes())))
        )

    touched: set[int] = set()
    rest_nodes: dict[int, PlanNode] = dict(rest.nodes)

    if declared_crossing:
        crossing = _check_declared(
            declared_crossing, boundary, internal, rest, policy
        )
    else:
        crossing, renames = _auto_wire(boundary, internal, policy)
        for node_id, mapping in renames.items():
            node = rest_nodes[node_id]
            new_inputs = tuple(
                VarBinding(mapping.get(b.variable, b.variable), b.value)
                for b in node.inputs
            )
            rest_nodes[node_id] = replace(node, inputs=new_inputs)
            touched.add(node_id)
            crossing = [
                replace(e, dest_input=mapping.get(e.dest_input, e.dest_input))
                if e.dest_node == node_id
                else e
                for e in crossing
            ]

    fresh_start = max(
        [p0.next_id]
        + [i + 1 for i in rest_nodes]
        + [i + 1 for i in internal.nodes if i > 0]
    )
    id_map: dict[int, int] = {}
    cursor = fresh_start
    for old in sorted((i for i in internal.nodes if i < 0), reverse=True):
        id_map[old] = cursor
        cursor += 1

    def remap(i: int) -> int:
        return id_map.get(i, i)

    merged_nodes = list(rest_nodes.values()) + [
        replace(n, id=remap(n.id)) for n in internal.nodes.values()
    ]
    merged_edges = [e for e in rest.edges]
    for e in internal.edges:
        merged_edges.append(
            replace(e, src_node=remap(e.src_node), dest_node=remap(e.dest_node))
        )
    for e in crossing:
        merged_edges.append(
            replace(e, src_node=remap(e.src_node), dest_node=remap(e.dest_node))
        )

    result = make_plan(merged_nodes, merged_edges, next_id=cursor)
    if not is_acyclic(result):
        raise graph.CycleError("would-create-cycle: reassembled plan is cyclic")
    return ReintegrationResult(
        plan=result, id_map=id_map, touched_external=tuple(sorted(touched))
    )


def _check_declared(
    declared: list[PlanEdge],
    boundary: BoundaryInterface,
    internal: Plan,
    rest: Plan,
    policy: ReintegrationPolicy,
) -> list[PlanEdge]:
    """Validate explicitly declared crossing edges; frozen demands equality."""
    inbound = set()
    outbound = set()
    for e in declared:
        if internal.has_node(e.dest_node):
            src = rest.node(e.src_node)
            if e.src_output not in src.outputs:
                raise MalformedRevisionError(
                    "unknown-variable",
                    f"external node {src.id} has no output {e.src_output!r}",
                )
            if e.dest_input not in internal.node(e.dest_node).input_names():
                raise MalformedRevisionError(
                    "unknown-variable",
                    f"revised node {e.dest_node} has no input {e.dest_input!r}",
                )
            inbound.add((e.src_node, e.src_output, e.dest_input))
        else:
            dest = rest.node(e.dest_node)
            if e.dest_input not in dest.input_names():
                raise MalformedRevisionError(
                    "unknown-variable",
                    f"external node {dest.id} has no input {e.dest_input!r}",
                )
            if e.src_output not in internal.node(e.src_node).outputs:
                raise MalformedRevisionError(
                    "unknown-variable",
                    f"revised node {e.src_node} has no output {e.src_output!r}",
                )
            outbound.add((e.src_output, e.dest_node, e.dest_input))

    if policy.mode is PolicyMode.FROZEN:
        want_in = {tuple(l) for l in boundary.inbound}
        want_out = {tuple(l) for l in boundary.outbound}
        if inbound != want_in or outbound != want_out:
            offending = sorted(
                {t[2] for t in inbound ^ want_in} | {t[0] for t in outbound ^ want_out}
            )
            raise BoundaryMismatchError(
                tuple(offending), "declared crossing edges differ from the boundary"
            )
    return list(declared)


def _auto_wire(
    boundary: BoundaryInterface,
    internal: Plan,
    policy: ReintegrationPolicy,
) -> tuple[list[PlanEdge], dict[int, dict[str, str]]]:
    """Reconstruct crossing edges by variable-name matching.

    Returns the crossing edges plus, under the flexible policy, per-external
    -node input rename maps (old variable name to replacement output name).
    """
    demands = _demands(internal)
    producers = _producers(internal)
    inbound_vars = {l.dest_input for l in boundary.inbound}
    outbound_vars = {l.src_output for l in boundary.outbound}

    if policy.mode is PolicyMode.FROZEN:
        missing_in = sorted(inbound_vars - set(demands))
        extra_demand = sorted(set(demands) - inbound_vars)
        missing_out = sorted(outbound_vars - set(producers))
        offending = sorted(set(missing_in + extra_demand + missing_out))
        if offending:
            raise BoundaryMismatchError(
                tuple(offending),
                "inbound missing "
                + repr(missing_in)
                + ", extra demands "
                + repr(extra_demand)
                + ", outbound missing "
                + repr(missing_out),
            )

    crossing: list[PlanEdge] = []
    for link in boundary.inbound:
        for dest in demands.get(link.dest_input, []):
            crossing.append(
                PlanEdge(
                    src_node=link.src_node,
                    dest_node=dest,
                    src_output=link.src_output,
                    dest_input=link.dest_input,
                )
            )

    consumed_internally = {e.src_output for e in internal.edges}
    claimed: set[str] = set()
    renames: dict[int, dict[str, str]] = {}
    for link in boundary.outbound:
        if link.src_output in producers:
            src = max(producers[link.src_output])
            crossing.append(
                PlanEdge(
                    src_node=src,
                    dest_node=link.dest_node,
                    src_output=link.src_output,
                    dest_input=link.dest_input,
                )
            )
            continue
        # Flexible replacement: candidates are outputs that neither feed an
        # internal edge, nor belong to the boundary, nor are already claimed.
        free = sorted(
            v
            for v in producers
            if v not in consumed_internally
            and v not in outbound_vars
            and v not in claimed
        )
        if link.dest_input in free:
            replacement = link.dest_input
        elif len(free) == 1:
            replacement = free[0]
        else:
            raise BoundaryMismatchError(
                (link.src_output,),
                f"no unambiguous replacement output for {link.src_output!r}",
            )
        claimed.add(replacement)
        src = max(producers[replacement])
        if replacement == link.dest_input:
            crossing.append(
                PlanEdge(
                    src_node=src,
                    dest_node=link.dest_node,
                    src_output=replacement,
                    dest_input=link.dest_input,
                )
            )
        else:
            renames.setdefault(link.dest_node, {})[link.dest_input] = replacement
            crossing.append(
                PlanEdge(
                    src_node=src,
                    dest_node=link.dest_node,
                    src_output=replacement,
                    dest_input=link.dest_input,
                )
            )
    return crossing, renames


__all__ = [
    "PolicyMode",
    "ReintegrationPolicy",
    "FROZEN",
    "FLEXIBLE",
    "BoundaryMismatchError",
    "MalformedRevisionError",
    "ReintegrationResult",
    "reintegrate",
]

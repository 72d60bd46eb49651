"""Structural queries over plan DAGs: ordering, reachability, subgraphs."""

from __future__ import annotations

import heapq
from typing import Iterable

from .model import (
    BoundaryInterface,
    InboundLink,
    OutboundLink,
    Plan,
    PlanEdge,
    SubgraphSelection,
    make_boundary,
    make_plan,
)


class CycleError(ValueError):
    """Raised when an operation requires an acyclic plan and finds a cycle."""


def topo_order(plan: Plan) -> tuple[int, ...]:
    """Topological order of node ids, ties broken by ascending id."""
    indegree = {i: 0 for i in plan.nodes}
    successors: dict[int, list[int]] = {i: [] for i in plan.nodes}
    for e in plan.edges:
        if e.src_node in indegree and e.dest_node in indegree:
            indegree[e.dest_node] += 1
            successors[e.src_node].append(e.dest_node)
    ready = [i for i, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j in successors[i]:
            indegree[j] -= 1
            if indegree[j] == 0:
                heapq.heappush(ready, j)
    if len(order) != len(plan.nodes):
        raise CycleError("plan contains a cycle")
    return tuple(order)


def is_acyclic(plan: Plan) -> bool:
    try:
        topo_order(plan)
    except CycleError:
        return False
    return True


def descendants(plan: Plan, node_id: int) -> frozenset[int]:
    """All nodes reachable from node_id, excluding node_id itself."""
    successors: dict[int, list[int]] = {i: [] for i in plan.nodes}
    for e in plan.edges:
        successors[e.src_node].append(e.dest_node)
    seen: set[int] = set()
    stack = list(successors.get(node_id, ()))
    while stack:
        i = stack.pop()
        if i in seen:
            continue
        seen.add(i)
        stack.extend(successors[i])
    return frozenset(seen)


def ancestors(plan: Plan, node_id: int) -> frozenset[int]:
    predecessors: dict[int, list[int]] = {i: [] for i in plan.nodes}
    for e in plan.edges:
        predecessors[e.dest_node].append(e.src_node)
    seen: set[int] = set()
    stack = list(predecessors.get(node_id, ()))
    while stack:
        i = stack.pop()
        if i in seen:
            continue
        seen.add(i)
        stack.extend(predecessors[i])
    return frozenset(seen)


def crossing_edges(plan: Plan, sel: SubgraphSelection) -> tuple[PlanEdge, ...]:
    """Edges with exactly one endpoint inside the selection, canonical order."""
    ids = sel.node_ids
    return tuple(
        e for e in plan.edges if (e.src_node in ids) != (e.dest_node in ids)
    )


def boundary_of(plan: Plan, sel: SubgraphSelection) -> BoundaryInterface:
    inbound: list[InboundLink] = []
    outbound: list[OutboundLink] = []
    for e in crossing_edges(plan, sel):
        if e.dest_node in sel.node_ids:
            inbound.append(InboundLink(e.src_node, e.src_output, e.dest_input))
        else:
            outbound.append(OutboundLink(e.src_output, e.dest_node, e.dest_input))
    return make_boundary(inbound, outbound)


def induced_subgraph(
    plan: Plan, sel: SubgraphSelection
) -> tuple[Plan, BoundaryInterface]:
    """The selected nodes with their internal edges, plus the boundary.

    Together with ``crossing_edges`` and the complement returned by
    ``remainder``, the original plan can be reassembled exactly.
    """
    unknown = sel.node_ids - set(plan.nodes)
    if unknown:
        raise KeyError(f"selection references unknown node ids {sorted(unknown)}")
    ids = sel.node_ids
    nodes = [plan.nodes[i] for i in sorted(ids)]
    internal = [e for e in plan.edges if e.src_node in ids and e.dest_node in ids]
    return make_plan(nodes, internal, next_id=plan.next_id), boundary_of(plan, sel)


def remainder(plan: Plan, sel: SubgraphSelection) -> Plan:
    """The plan minus the selection, internal edges of the remainder only."""
    ids = sel.node_ids
    nodes = [n for i, n in plan.nodes.items() if i not in ids]
    edges = [e for e in plan.edges if e.src_node not in ids and e.dest_node not in ids]
    return make_plan(nodes, edges, next_id=plan.next_id)


def reassemble(subplan: Plan, rest: Plan, crossing: Iterable[PlanEdge]) -> Plan:
    """Inverse of the induced_subgraph/remainder/crossing_edges split."""
    nodes = list(subplan.nodes.values()) + list(rest.nodes.values())
    edges = list(subplan.edges) + list(rest.edges) + list(crossing)
    return make_plan(nodes, edges, next_id=max(subplan.next_id, rest.next_id))


def is_contractible(plan: Plan, sel: SubgraphSelection) -> bool:
    """True when collapsing the selection to one node keeps the plan acyclic.

    Equivalently: no path leaves the selection and re-enters it. Edges fully
    inside the selection disappear into the contracted node and are ignored.
    """
    ids = sel.node_ids
    if not ids <= set(plan.nodes):
        raise KeyError("selection references unknown node ids")
    sentinel = object()
    successors: dict[object, set[object]] = {}

    def key(i: int) -> object:
        return sentinel if i in ids else i

    for e in plan.edges:
        a, b = key(e.src_node), key(e.dest_node)
        if a is sentinel and b is sentinel:
            continue
        successors.setdefault(a, set()).add(b)

    # Iterative three-color DFS over the contracted graph.
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[object, int] = {}
    for start in list(successors):
        if color.get(start, WHITE) != WHITE:
            continue
        stack: list[tuple[object, Iterable[object]]] = [(start, iter(successors.get(start, ())))]
        color[start] = GRAY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                c = color.get(nxt, WHITE)
                if c == GRAY:
                    return False
                if c == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, iter(successors.get(nxt, ()))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return True

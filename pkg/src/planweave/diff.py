"""Deterministic structural diff between two plan snapshots."""

from __future__ import annotations

from .model import DiffSummary, Plan, node_data_equal


def plan_diff(before: Plan, after: Plan) -> DiffSummary:
    before_ids = set(before.nodes)
    after_ids = set(after.nodes)
    added = tuple(sorted(after_ids - before_ids))
    removed = tuple(sorted(before_ids - after_ids))
    modified = tuple(
        sorted(
            i
            for i in before_ids & after_ids
            if not node_data_equal(before.nodes[i], after.nodes[i])
        )
    )
    before_edges = set(before.edges)
    after_edges = set(after.edges)
    edges_added = len(after_edges - before_edges)
    edges_removed = len(before_edges - after_edges)

    parts: list[str] = []
    if added:
        parts.append(f"+{len(added)} nodes {list(added)}")
    if removed:
        parts.append(f"-{len(removed)} nodes {list(removed)}")
    if modified:
        parts.append(f"~{len(modified)} nodes {list(modified)}")
    if edges_added:
        parts.append(f"+{edges_added} edges")
    if edges_removed:
        parts.append(f"-{edges_removed} edges")
    text = "; ".join(parts) if parts else "no changes"

    return DiffSummary(
        nodes_added=added,
        nodes_removed=removed,
        nodes_modified=modified,
        edges_added=edges_added,
        edges_removed=edges_removed,
        text=text,
    )

"""Shared fixtures and terse plan builders for the test suite."""

from __future__ import annotations

import pytest

from planweave.goldplans import GoldPlanSet, gold_plan_set
from planweave.model import (
    AgentKind,
    Plan,
    PlanEdge,
    PlanNode,
    VarBinding,
    make_plan,
)

_AGENT_BY_LETTER = {
    "c": AgentKind.CODE,
    "m": AgentKind.MATH,
    "s": AgentKind.SEARCH,
    "k": AgentKind.COMMONSENSE,
}


def quick_plan(spec: str) -> Plan:
    """Build a plan from a compact spec like ``"1m 2c 3m; 1-2 2-3"``.

    Nodes come first as ``<id><agent letter>``; node i outputs ``v<i>``.
    Edges follow the semicolon as ``src-dest`` pairs; each edge carries the
    source's output into a fresh input slot on the destination, so the result
    is always draft valid.
    """
    node_part, _, edge_part = spec.partition(";")
    pairs = []
    for token in edge_part.split():
        src, _, dest = token.partition("-")
        pairs.append((int(src), int(dest)))
    inputs: dict[int, list[VarBinding]] = {}
    edges = []
    for src, dest in pairs:
        slot = f"in{src}_{dest}"
        inputs.setdefault(dest, []).append(VarBinding(slot))
        edges.append(PlanEdge(src, dest, f"v{src}", slot))
    nodes = []
    for token in node_part.split():
        node_id = int(token[:-1])
        agent = _AGENT_BY_LETTER[token[-1]]
        nodes.append(
            PlanNode(
                id=node_id,
                task=f"do step {node_id}",
                agent=agent,
                inputs=tuple(inputs.get(node_id, ())),
                outputs=(f"v{node_id}",),
            )
        )
    return make_plan(nodes, edges)


@pytest.fixture(scope="session")
def golds() -> GoldPlanSet:
    return gold_plan_set()


@pytest.fixture()
def chain3() -> Plan:
    return quick_plan("1m 2c 3s; 1-2 2-3")


@pytest.fixture()
def diamond() -> Plan:
    return quick_plan("1m 2c 3s 4m; 1-2 1-3 2-4 3-4")

"""Planner backends behind one protocol.

OracleBackend is the deterministic reference reviser: it inverts the
benchmark feedback templates exactly, so every revision it produces should
integrate and reproduce the gold plan. FaultInjectorBackend wraps another
backend and corrupts a seeded fraction of its answers to exercise failure
paths. LiveBackend talks to an OpenAI-compatible chat endpoint configured
through environment variables. CannedBackend replays fixed plans for tests.
"""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from random import Random
from typing import Any, Protocol, Sequence, runtime_checkable

from .benchgen import (
    merged_node_spec,
    parse_feedback,
    repair_from_feedback,
    revised_subplan_from_feedback,
    split_specs,
)
from .edits import (
    EditSequence,
    NodeSpec,
    SetTask,
    SplitMode,
    apply_sequence,
    sequence_from_docs,
)
from .model import (
    AgentKind,
    BoundaryInterface,
    Plan,
    PlanEdge,
    PlanNode,
    VarBinding,
    make_plan,
)
from .prompts import PromptKind, prompt_parts
from .serialize import node_from_doc, plan_from_doc

ENV_BASE_URL = "PLANWEAVE_LLM_BASE_URL"
ENV_MODEL = "PLANWEAVE_LLM_MODEL"
ENV_API_KEY = "PLANWEAVE_LLM_API_KEY"


class BackendError(Exception):
    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


@dataclass(frozen=True)
class SplitSpec:
    first: NodeSpec
    second: NodeSpec
    mode: SplitMode


@runtime_checkable
class PlannerBackend(Protocol):
    name: str

    def generate(self, question: str) -> Plan: ...

    def revise_full(
        self, plan: Plan, feedback: str, history: Sequence[str] = ()
    ) -> Plan: ...

    def revise_subplan(
        self,
        subplan: Plan,
        boundary: BoundaryInterface,
        feedback: str,
        context: Plan | None = None,
    ) -> Plan: ...

    def auto_merge(self, subplan: Plan, boundary: BoundaryInterface) -> NodeSpec: ...

    def auto_split(self, node: PlanNode, boundary: BoundaryInterface) -> SplitSpec: ...

    def to_edit_sequence(self, plan: Plan, feedback: str) -> EditSequence: ...


def _demo_plan() -> Plan:
    """A small all-math plan any backend can emit for an arbitrary question;
    it executes without fixtures."""
    m = AgentKind.MATH
    nodes = [
        PlanNode(
            id=1,
            task="Compute pair_sum as first_value plus second_value and pair_diff"
            " as first_value minus second_value"
            " {{expr pair_sum: first_value + second_value}}"
            " {{expr pair_diff: first_value - second_value}}",
            agent=m,
            inputs=(VarBinding("first_value", "12"), VarBinding("second_value", "8")),
            outputs=("pair_sum", "pair_diff"),
        ),
        PlanNode(
            id=2,
            task="Compute double_sum as pair_sum times scale_factor"
            " {{expr double_sum: pair_sum * scale_factor}}",
            agent=m,
            inputs=(VarBinding("pair_sum", ""), VarBinding("scale_factor", "3")),
            outputs=("double_sum",),
        ),
        PlanNode(
            id=3,
            task="Compute square_diff as pair_diff times pair_diff"
            " {{expr square_diff: pair_diff * pair_diff}}",
            agent=m,
            inputs=(VarBinding("pair_diff", ""),),
            outputs=("square_diff",),
        ),
        PlanNode(
            id=4,
            task="Compute combo_value as double_sum plus square_diff"
            " {{expr combo_value: double_sum + square_diff}}",
            agent=m,
            inputs=(VarBinding("double_sum", ""), VarBinding("square_diff", "")),
            outputs=("combo_value",),
        ),
        PlanNode(
            id=5,
            task="Compute final_value as combo_value minus pair_sum"
            " {{expr final_value: combo_value - pair_sum}}",
            agent=m,
            inputs=(VarBinding("combo_value", ""), VarBinding("pair_sum", "")),
            outputs=("final_value",),
        ),
    ]
    edges = [
        PlanEdge(1, 2, "pair_sum", "pair_sum"),
        PlanEdge(1, 3, "pair_diff", "pair_diff"),
        PlanEdge(2, 4, "double_sum", "double_sum"),
        PlanEdge(3, 4, "square_diff", "square_diff"),
        PlanEdge(4, 5, "combo_value", "combo_value"),
        PlanEdge(1, 5, "pair_sum", "pair_sum"),
    ]
    return make_plan(nodes, edges)


class OracleBackend:
    """Inverts the benchmark feedback templates deterministically."""

    name = "oracle"

    def generate(self, question: str) -> Plan:
        return _demo_plan()

    def revise_full(
        self, plan: Plan, feedback: str, history: Sequence[str] = ()
    ) -> Plan:
        parsed = parse_feedback(feedback)
        return apply_sequence(plan, repair_from_feedback(parsed, plan))

    def revise_subplan(
        self,
        subplan: Plan,
        boundary: BoundaryInterface,
        feedback: str,
        context: Plan | None = None,
    ) -> Plan:
        return revised_subplan_from_feedback(parse_feedback(feedback), subplan)

    def auto_merge(self, subplan: Plan, boundary: BoundaryInterface) -> NodeSpec:
        parts = [subplan.nodes[i] for i in sorted(subplan.nodes)]
        task = " ".join(p.task for p in parts)
        return merged_node_spec(subplan, list(subplan.nodes), task)

    def auto_split(self, node: PlanNode, boundary: BoundaryInterface) -> SplitSpec:
        from .benchgen import MERGED_PAR_TASK_RE, MERGED_SEQ_TASK_RE

        if m := MERGED_SEQ_TASK_RE.match(node.task):
            first, second = split_specs(
                node, m.group(1), m.group(2), SplitMode.SEQUENTIAL
            )
            return SplitSpec(first, second, SplitMode.SEQUENTIAL)
        if m := MERGED_PAR_TASK_RE.match(node.task):
            first, second = split_specs(node, m.group(1), m.group(2), SplitMode.PARALLEL)
            return SplitSpec(first, second, SplitMode.PARALLEL)
        raise BackendError(
            "unsplittable", f"node {node.id} task has no recognizable two-step shape"
        )

    def to_edit_sequence(self, plan: Plan, feedback: str) -> EditSequence:
        return repair_from_feedback(parse_feedback(feedback), plan)


def _cyclic_junk() -> Plan:
    a = PlanNode(
        id=-1,
        task="loop a",
        agent=AgentKind.MATH,
        inputs=(VarBinding("beta", ""),),
        outputs=("alpha",),
    )
    b = PlanNode(
        id=-2,
        task="loop b",
        agent=AgentKind.MATH,
        inputs=(VarBinding("alpha", ""),),
        outputs=("beta",),
    )
    return make_plan(
        [a, b],
        [PlanEdge(-1, -2, "alpha", "alpha"), PlanEdge(-2, -1, "beta", "beta")],
        next_id=1,
    )


@dataclass
class FaultInjectorBackend:
    """Wraps a backend and corrupts a seeded fraction of its revisions.

    boundary_violation_rate renames one boundary variable in targeted
    revisions (a frozen-policy mismatch); malformed_rate swaps the revision
    for a cyclic two-node plan; corrupt_step replaces that step of every
    edit sequence with an op naming an unknown node.
    """

    inner: PlannerBackend
    boundary_violation_rate: float = 0.0
    malformed_rate: float = 0.0
    corrupt_step: int | None = None
    seed: int = 0
    name: str = "inject"
    _rng: Random = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._rng = Random(self.seed)

    def generate(self, question: str) -> Plan:
        return self.inner.generate(question)

    def revise_full(
        self, plan: Plan, feedback: str, history: Sequence[str] = ()
    ) -> Plan:
        result = self.inner.revise_full(plan, feedback, history)
        if self._rng.random() < self.malformed_rate:
            return _cyclic_junk()
        return result

    def _violate_boundary(self, revised: Plan, boundary: BoundaryInterface) -> Plan:
        internally_consumed = {e.src_output for e in revised.edges}
        outbound = sorted({link.src_output for link in boundary.outbound})
        ranked = [v for v in outbound if v not in internally_consumed] + [
            v for v in outbound if v in internally_consumed
        ]
        for var in ranked:
            producers = [n for n in revised.nodes.values() if var in n.outputs]
            if not producers:
                continue
            node = max(producers, key=lambda n: n.id)
            renamed = var + "_x"
            nodes = {
                i: (
                    n
                    if i != node.id
                    else PlanNode(
                        id=n.id,
                        task=n.task,
                        agent=n.agent,
                        inputs=n.inputs,
                        outputs=tuple(renamed if o == var else o for o in n.outputs),
                    )
                )
                for i, n in revised.nodes.items()
            }
            edges = tuple(
                e
                if not (e.src_node == node.id and e.src_output == var)
                else PlanEdge(e.src_node, e.dest_node, renamed, e.dest_input)
                for e in revised.edges
            )
            return make_plan(nodes.values(), edges, next_id=revised.next_id)
        inbound = sorted({link.dest_input for link in boundary.inbound})
        fed = {(e.dest_node, e.dest_input) for e in revised.edges}
        for var in inbound:
            for node in sorted(revised.nodes.values(), key=lambda n: n.id):
                hit = any(
                    b.variable == var and b.value == "" for b in node.inputs
                ) and (node.id, var) not in fed
                if not hit:
                    continue
                renamed = var + "_x"
                nodes = {
                    i: (
                        n
                        if i != node.id
                        else PlanNode(
                            id=n.id,
                            task=n.task,
                            agent=n.agent,
                            inputs=tuple(
                                VarBinding(renamed, b.value)
                                if b.variable == var
                                else b
                                for b in n.inputs
                            ),
                            outputs=n.outputs,
                        )
                    )
                    for i, n in revised.nodes.items()
                }
                return make_plan(nodes.values(), revised.edges, next_id=revised.next_id)
        return revised

    def revise_subplan(
        self,
        subplan: Plan,
        boundary: BoundaryInterface,
        feedback: str,
        context: Plan | None = None,
    ) -> Plan:
        result = self.inner.revise_subplan(subplan, boundary, feedback, context)
        roll = self._rng.random()
        if roll < self.malformed_rate:
            return _cyclic_junk()
        if roll < self.malformed_rate + self.boundary_violation_rate:
            return self._violate_boundary(result, boundary)
        return result

    def auto_merge(self, subplan: Plan, boundary: BoundaryInterface) -> NodeSpec:
        return self.inner.auto_merge(subplan, boundary)

    def auto_split(self, node: PlanNode, boundary: BoundaryInterface) -> SplitSpec:
        return self.inner.auto_split(node, boundary)

    def to_edit_sequence(self, plan: Plan, feedback: str) -> EditSequence:
        ops = self.inner.to_edit_sequence(plan, feedback)
        k = self.corrupt_step
        if k is not None and len(ops) > k:
            ops = ops[:k] + (SetTask(10**9, "corrupted step"),) + ops[k + 1 :]
        return ops


@dataclass
class CannedBackend:
    """Replays a fixed plan; revisions return their input unchanged."""

    plan: Plan
    name: str = "canned"

    def generate(self, question: str) -> Plan:
        return self.plan

    def revise_full(
        self, plan: Plan, feedback: str, history: Sequence[str] = ()
    ) -> Plan:
        return plan

    def revise_subplan(
        self,
        subplan: Plan,
        boundary: BoundaryInterface,
        feedback: str,
        context: Plan | None = None,
    ) -> Plan:
        return subplan

    def auto_merge(self, subplan: Plan, boundary: BoundaryInterface) -> NodeSpec:
        parts = [subplan.nodes[i] for i in sorted(subplan.nodes)]
        return merged_node_spec(
            subplan, list(subplan.nodes), " ".join(p.task for p in parts)
        )

    def auto_split(self, node: PlanNode, boundary: BoundaryInterface) -> SplitSpec:
        raise BackendError("unsplittable", "canned backend cannot split")

    def to_edit_sequence(self, plan: Plan, feedback: str) -> EditSequence:
        return ()


def extract_json(text: str) -> Any:
    """First well-formed JSON object or array embedded in the text."""
    decoder = json.JSONDecoder()
    for pos, char in enumerate(text):
        if char not in "[{":
            continue
        try:
            value, _ = decoder.raw_decode(text, pos)
        except json.JSONDecodeError:
            continue
        return value
    raise BackendError("bad-response", "no JSON value found in model output")


@dataclass
class LiveBackend:
    """OpenAI-compatible chat client configured via environment variables."""

    base_url: str | None = None
    model: str | None = None
    api_key: str | None = None
    timeout: float = 120.0
    name: str = "live"

    def __post_init__(self) -> None:
        self.base_url = self.base_url or os.environ.get(ENV_BASE_URL)
        self.model = self.model or os.environ.get(ENV_MODEL)
        self.api_key = self.api_key or os.environ.get(ENV_API_KEY, "")
        if not self.base_url or not self.model:
            raise BackendError(
                "backend-unconfigured",
                f"set {ENV_BASE_URL} and {ENV_MODEL} to use the live backend",
            )

    def _chat(self, kind: PromptKind, payload: dict[str, Any]) -> str:
        bundle = prompt_parts(kind, payload)
        body = json.dumps(
            {
                "model": self.model,
                "temperature": 0,
                "messages": [
                    {"role": "system", "content": bundle.system},
                    {"role": "user", "content": bundle.user},
                ],
            }
        ).encode("utf-8")
        url = self.base_url.rstrip("/") + "/chat/completions"
        request = urllib.request.Request(
            url,
            data=body,
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self.api_key}",
            },
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                doc = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
            raise BackendError("backend-unreachable", str(exc)) from exc
        try:
            return doc["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError("bad-response", "unexpected chat payload shape") from exc

    def _plan_reply(self, kind: PromptKind, payload: dict[str, Any]) -> Plan:
        raw = extract_json(self._chat(kind, payload))
        try:
            return plan_from_doc(raw)
        except Exception as exc:
            raise BackendError("bad-response", f"unparseable plan: {exc}") from exc

    def generate(self, question: str) -> Plan:
        return self._plan_reply(PromptKind.GENERATE, {"question": question})

    def revise_full(
        self, plan: Plan, feedback: str, history: Sequence[str] = ()
    ) -> Plan:
        return self._plan_reply(
            PromptKind.REPLAN,
            {"plan": plan, "feedback": feedback, "history": tuple(history)},
        )

    def revise_subplan(
        self,
        subplan: Plan,
        boundary: BoundaryInterface,
        feedback: str,
        context: Plan | None = None,
    ) -> Plan:
        payload: dict[str, Any] = {
            "subplan": subplan,
            "boundary": boundary,
            "feedback": feedback,
        }
        if context is not None:
            payload["context"] = context
        return self._plan_reply(PromptKind.SUBGRAPH_REPLAN, payload)

    def auto_merge(self, subplan: Plan, boundary: BoundaryInterface) -> NodeSpec:
        raw = extract_json(
            self._chat(PromptKind.AUTO_MERGE, {"subplan": subplan, "boundary": boundary})
        )
        try:
            if isinstance(raw, dict) and "nodes" in raw:
                plan = plan_from_doc(raw)
                (node,) = plan.nodes.values()
            else:
                node = node_from_doc(raw)
        except Exception as exc:
            raise BackendError("bad-response", f"unparseable node: {exc}") from exc
        return NodeSpec(node.task, node.agent, node.inputs, node.outputs)

    def auto_split(self, node: PlanNode, boundary: BoundaryInterface) -> SplitSpec:
        wrapper = make_plan([node], [])
        raw = extract_json(
            self._chat(PromptKind.AUTO_SPLIT, {"subplan": wrapper, "boundary": boundary})
        )
        try:
            plan = plan_from_doc(raw)
        except Exception as exc:
            raise BackendError("bad-response", f"unparseable subplan: {exc}") from exc
        parts = [plan.nodes[i] for i in sorted(plan.nodes, reverse=True)]
        if len(parts) != 2:
            raise BackendError("bad-response", "auto split must yield two nodes")
        first, second = parts
        mode = (
            SplitMode.SEQUENTIAL
            if any(e for e in plan.edges)
            else SplitMode.PARALLEL
        )
        return SplitSpec(
            NodeSpec(first.task, first.agent, first.inputs, first.outputs),
            NodeSpec(second.task, second.agent, second.inputs, second.outputs),
            mode,
        )

    def to_edit_sequence(self, plan: Plan, feedback: str) -> EditSequence:
        raw = extract_json(
            self._chat(PromptKind.REPLAN, {"plan": plan, "feedback": feedback})
        )
        if not isinstance(raw, list):
            raise BackendError("bad-response", "expected a JSON list of edit ops")
        try:
            return sequence_from_docs(raw)
        except Exception as exc:
            raise BackendError("bad-response", f"unparseable edits: {exc}") from exc


def build_backend(spec: str, seed: int = 0) -> PlannerBackend:
    """Backend factory for CLI specs: oracle | inject[:key=value,...] | live."""
    name, _, params_text = spec.partition(":")
    if name == "oracle":
        return OracleBackend()
    if name == "live":
        return LiveBackend()
    if name == "inject":
        params: dict[str, str] = {}
        if params_text:
            for pair in params_text.split(","):
                key, _, value = pair.partition("=")
                if not value:
                    raise BackendError("bad-backend-spec", f"bad parameter {pair!r}")
                params[key.strip()] = value.strip()
        known = {"boundary_violation_rate", "malformed_rate", "corrupt_step"}
        unknown = set(params) - known
        if unknown:
            raise BackendError(
                "bad-backend-spec", f"unknown parameters: {sorted(unknown)}"
            )
        return FaultInjectorBackend(
            inner=OracleBackend(),
            boundary_violation_rate=float(params.get("boundary_violation_rate", 0.0)),
            malformed_rate=float(params.get("malformed_rate", 0.0)),
            corrupt_step=(
                int(params["corrupt_step"]) if "corrupt_step" in params else None
            ),
            seed=seed,
        )
    raise BackendError("bad-backend-spec", f"unknown backend {name!r}")

"""Prompt assembly: fixed templates, payload splicing, and error codes."""

import json

import pytest

from planweave.backends import OracleBackend
from planweave.graph import induced_subgraph
from planweave.model import AGENT_DESCRIPTIONS, AgentKind, selection_of
from planweave.prompts import (
    GENERATION_SYSTEM_PROMPT,
    PromptError,
    PromptKind,
    SUBGRAPH_SYSTEM_PROMPT,
    assemble_prompt,
    prompt_parts,
)
from planweave.serialize import plan_to_doc


def _demo():
    return OracleBackend().generate("q")


def _subgraph_payload(**extra):
    subplan, boundary = induced_subgraph(_demo(), selection_of({2, 3}))
    return {"subplan": subplan, "boundary": boundary, **extra}


def test_prompt_kind_vocabulary():
    assert [k.value for k in PromptKind] == [
        "generate",
        "replan",
        "subgraph_replan",
        "auto_merge",
        "auto_split",
    ]


def test_generate_prompt_shape():
    bundle = prompt_parts("generate", {"question": "How many?"})
    assert bundle.system == GENERATION_SYSTEM_PROMPT
    assert bundle.user == "How many?"
    assert bundle.text == bundle.system + "\n\n" + bundle.user
    assert assemble_prompt("generate", {"question": "How many?"}) == bundle.text
    # Enum and string kinds resolve identically, and assembly is deterministic.
    again = prompt_parts(PromptKind.GENERATE, {"question": "How many?"})
    assert again == bundle


def test_generation_system_prompt_carries_the_agent_catalog():
    for kind in AgentKind:
        assert AGENT_DESCRIPTIONS[kind] in GENERATION_SYSTEM_PROMPT
    assert GENERATION_SYSTEM_PROMPT.count(
        "Do NOT mention any other nodes in the task description."
    ) == 3
    assert '"agent_name": "<agent_name>"' in GENERATION_SYSTEM_PROMPT


def test_replan_prompt_threads_history_and_plan():
    plan = _demo()
    bundle = prompt_parts(
        "replan", {"plan": plan, "feedback": "fix node 4", "history": ("a", "b")}
    )
    assert bundle.system == GENERATION_SYSTEM_PROMPT
    assert "Conversation History:\na\nb\n" in bundle.user
    assert "Plan:\n" + json.dumps(plan_to_doc(plan), indent=2, ensure_ascii=False) in bundle.user
    assert bundle.user.endswith("User Feedback:\nfix node 4")

    empty = prompt_parts("replan", {"plan": plan, "feedback": "f"})
    assert "Conversation History:\n(none)\n" in empty.user


def test_subgraph_replan_prompt_carries_boundary_and_optional_context():
    payload = _subgraph_payload(feedback="rework this part")
    bundle = prompt_parts("subgraph_replan", payload)
    assert bundle.system == SUBGRAPH_SYSTEM_PROMPT
    assert "Sub-graph Plan:\n" in bundle.user
    assert "Boundary Edges:\n" in bundle.user
    assert '"src_node": 1' in bundle.user
    assert '"dest_node": 4' in bundle.user
    assert "User Feedback:\nrework this part" in bundle.user
    assert bundle.user.endswith(
        "Note: Must have the inputs/outputs interface defined by edges to"
        " connect to outside nodes."
    )
    assert "Full Plan" not in bundle.user

    with_context = prompt_parts(
        "subgraph_replan", _subgraph_payload(feedback="f", context=_demo())
    )
    assert "Full Plan (context only, do not modify nodes outside the" in with_context.user


def test_auto_op_prompts_differ_only_in_the_lead():
    merge = prompt_parts("auto_merge", _subgraph_payload())
    split = prompt_parts("auto_split", _subgraph_payload())
    assert merge.system == SUBGRAPH_SYSTEM_PROMPT == split.system
    assert "merge the sub-graph into EXACTLY ONE node" in merge.user
    assert "split the sub-graph into a new plan" in split.user
    merge_tail = merge.user.split("\n\n", 1)[1]
    split_tail = split.user.split("\n\n", 1)[1]
    assert merge_tail == split_tail


def test_prompt_error_codes():
    with pytest.raises(PromptError) as err:
        prompt_parts("generate", {})
    assert err.value.code == "missing-field"
    assert "'question'" in err.value.detail

    with pytest.raises(PromptError) as err:
        prompt_parts("replan", {"plan": _demo(), "feedback": None})
    assert err.value.code == "missing-field"

    with pytest.raises(PromptError) as err:
        prompt_parts("daydream", {})
    assert err.value.code == "unknown-kind"

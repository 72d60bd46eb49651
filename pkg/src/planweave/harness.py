"""Experiment harness: run revision conditions over a benchmark dataset.

An experiment crosses every dataset item with every requested condition,
skipping pairs the condition does not apply to, and scores each integrated
revision against the item's gold plan. Finished runs are appended to
records.jsonl as they complete, so an interrupted experiment resumes where
it stopped instead of redoing work. Report tables (success, quality, and
optionally execution accuracy) are rewritten from the full record set at
the end of every run.
"""

from __future__ import annotations

import json
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from hashlib import blake2b
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from .backends import BackendError, PlannerBackend, build_backend
from .benchgen import (
    NODE_ID_TOKEN_RE,
    BenchmarkItem,
    BreakOpKind,
    FeedbackStyle,
    load_dataset,
)
from .execution import (
    AgentExecutor,
    DependencyError,
    InvalidPlanError,
    UnboundVariableError,
    build_executors,
    execute_all,
)
from .goldplans import Subset
from .metrics import (
    MetricReport,
    aggregate,
    ged,
    rows_to_csv,
    rows_to_markdown,
    semantic_similarity,
    stability,
    value_equal,
)
from .model import AgentKind, Plan, SubgraphSelection
from .reintegrate import FROZEN
from .revision import (
    CONDITION_SPECS,
    FeedbackScope,
    FeedbackText,
    RevisionCondition,
    RevisionOutcome,
    RevisionStatus,
    auto_merge,
    auto_split,
    revise_by_edit_sequence,
    revise_global,
    revise_targeted,
)
from .validate import ValidationLevel, validate_plan

_MERGE_KINDS = {BreakOpKind.MERGE_SEQ, BreakOpKind.MERGE_PAR}
_SPLIT_KINDS = {BreakOpKind.SPLIT_SEQ, BreakOpKind.SPLIT_PAR}


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: Path
    out_dir: Path
    conditions: tuple[RevisionCondition, ...] = tuple(RevisionCondition)
    backend_spec: str = "oracle"
    seed: int = 0
    execute_math: bool = False
    jobs: int = 1


def condition_applies(condition: RevisionCondition, item: BenchmarkItem) -> bool:
    """Conditions that presuppose a structure only run where it exists:
    auto-merge needs a merged-away pair, auto-split a mergeable node, and
    the edit-sequence condition a plan family whose answers are checkable."""
    spec = CONDITION_SPECS[condition]
    if spec.edit_sequence:
        return item.subset is Subset.STEPWISE_MATH
    if spec.auto_op == "merge":
        return item.op_kind in _MERGE_KINDS
    if spec.auto_op == "split":
        return item.op_kind in _SPLIT_KINDS
    return True


def plan_answer(
    plan: Plan, executors: Mapping[AgentKind, AgentExecutor] | None = None
) -> Any | None:
    """Execute the plan and return the sink's first output value.

    Returns None when the plan is not executable, any node on the sink's
    path fails, or the sink declares no outputs.
    """
    table = executors if executors is not None else build_executors()
    try:
        _, bundle = execute_all(plan, table)
    except (InvalidPlanError, UnboundVariableError, DependencyError):
        return None
    if bundle is None:
        return None
    sink = plan.nodes[bundle.sink_id]
    if not sink.outputs:
        return None
    return bundle.values.get(sink.outputs[0])


def run_one(
    item: BenchmarkItem,
    condition: RevisionCondition,
    backend: PlannerBackend,
    execute_math: bool = False,
) -> tuple[RevisionOutcome, MetricReport]:
    """Apply one condition to one item and score the result."""
    spec = CONDITION_SPECS[condition]
    if spec.edit_sequence:
        feedback = FeedbackText(
            item.feedback_id_anchored, FeedbackScope.GLOBAL, FeedbackStyle.ID_ANCHORED
        )
        outcome = revise_by_edit_sequence(item.p_initial, feedback, backend)
    elif spec.scope is FeedbackScope.GLOBAL:
        feedback = FeedbackText(
            item.feedback_id_anchored, FeedbackScope.GLOBAL, FeedbackStyle.ID_ANCHORED
        )
        outcome = revise_global(item.p_initial, feedback, (), backend)
    elif spec.auto_op == "merge":
        outcome = auto_merge(item.p_initial, item.target_nodes, backend, spec.policy)
    elif spec.auto_op == "split":
        (node_id,) = sorted(item.target_nodes.node_ids)
        outcome = auto_split(item.p_initial, node_id, backend, spec.policy)
    else:
        feedback = FeedbackText(
            item.feedback_deictic, FeedbackScope.TARGETED, FeedbackStyle.DEICTIC
        )
        outcome = revise_targeted(
            item.p_initial,
            item.target_nodes,
            feedback,
            spec.policy,
            spec.with_context,
            backend,
        )
    return outcome, score_outcome(item, outcome, execute_math)


def score_outcome(
    item: BenchmarkItem, outcome: RevisionOutcome, execute_math: bool = False
) -> MetricReport:
    """Quality metrics compare the revised plan to the gold plan; a failed
    revision scores as incorrect when answers are being checked."""
    check_answer = execute_math and item.subset is Subset.STEPWISE_MATH
    if outcome.status is not RevisionStatus.INTEGRATED:
        return MetricReport(
            ged=None,
            similarity=None,
            stability=None,
            integrated=False,
            exec_correct=False if check_answer else None,
        )
    assert outcome.plan is not None
    distance = ged(outcome.plan, item.p_gold)
    correct: bool | None = None
    if check_answer:
        correct = value_equal(plan_answer(outcome.plan), item.gold_answer)
    return MetricReport(
        ged=distance.value,
        similarity=semantic_similarity(outcome.plan, item.p_gold),
        stability=stability(item.p_initial, outcome.plan, item.target_nodes),
        integrated=True,
        exec_correct=correct,
        exact_ged=distance.exact,
    )


def record_doc(
    item_index: int,
    item: BenchmarkItem,
    condition: RevisionCondition,
    outcome: RevisionOutcome,
    report: MetricReport,
    wall_ms: float = 0.0,
) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "item_index": item_index,
        "condition": condition.value,
        "gold_name": item.gold_name,
        "subset": item.subset.value,
        "op_kind": item.op_kind.value,
        "status": outcome.status.value,
        "detail": outcome.detail,
        "failed_step": outcome.failed_step,
        "touched_external": sorted(outcome.touched_external),
        "wall_ms": wall_ms,
    }
    doc.update(report.to_row())
    return doc


def _record_seed(seed: int, item_index: int, condition: str) -> int:
    digest = blake2b(f"{seed}:{item_index}:{condition}".encode(), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


def run_experiment(config: ExperimentConfig) -> list[dict[str, Any]]:
    """Run (or resume) an experiment and rewrite its report files.

    Returns every record, resumed ones included, sorted by item and
    condition. Each pending pair gets a backend built from the experiment
    spec with a per-record seed, so results do not depend on worker count
    or on where a previous run was interrupted.
    """
    items = load_dataset(config.dataset)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / "records.jsonl"

    done: dict[tuple[int, str], dict[str, Any]] = {}
    if records_path.exists():
        for line in records_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            done[(int(doc["item_index"]), str(doc["condition"]))] = doc

    pending = [
        (index, item, condition)
        for index, item in enumerate(items)
        for condition in config.conditions
        if condition_applies(condition, item)
        and (index, condition.value) not in done
    ]

    lock = threading.Lock()
    fresh: list[dict[str, Any]] = []
    with records_path.open("a", encoding="utf-8") as tail:

        def work(task: tuple[int, BenchmarkItem, RevisionCondition]) -> None:
            index, item, condition = task
            backend = build_backend(
                config.backend_spec,
                seed=_record_seed(config.seed, index, condition.value),
            )
            started = time.perf_counter()
            outcome, report = run_one(item, condition, backend, config.execute_math)
            wall_ms = (time.perf_counter() - started) * 1000.0
            doc = record_doc(index, item, condition, outcome, report, wall_ms)
            with lock:
                tail.write(json.dumps(doc, sort_keys=True) + "\n")
                tail.flush()
                fresh.append(doc)

        if config.jobs > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                list(pool.map(work, pending))
        else:
            for task in pending:
                work(task)

    docs = list(done.values()) + fresh
    docs.sort(key=lambda d: (d["item_index"], d["condition"]))
    write_reports(docs, items, out_dir, config.execute_math)
    return docs


def wilson_interval(
    successes: int, total: int, z: float = 1.96
) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if total == 0:
        return (0.0, 1.0)
    phat = successes / total
    denom = 1 + z * z / total
    center = (phat + z * z / (2 * total)) / denom
    half = (
        z
        * math.sqrt(phat * (1 - phat) / total + z * z / (4 * total * total))
        / denom
    )
    return (max(0.0, center - half), min(1.0, center + half))


_SUCCESS_COLUMNS = (
    "condition",
    "op_kind",
    "runs",
    *(s.value for s in RevisionStatus),
    "success_rate",
    "ci_low",
    "ci_high",
)

_ACCURACY_COLUMNS = ("condition", "items", "correct", "accuracy")


def success_rows(docs: Iterable[Mapping[str, Any]]) -> list[dict[str, Any]]:
    groups: dict[tuple[str, str], list[Mapping[str, Any]]] = {}
    for doc in docs:
        key = (str(doc["condition"]), str(doc["op_kind"]))
        groups.setdefault(key, []).append(doc)
    rows = []
    for (condition, op_kind), members in sorted(groups.items()):
        runs = len(members)
        counts = {s.value: 0 for s in RevisionStatus}
        for doc in members:
            counts[str(doc["status"])] += 1
        integrated = counts[RevisionStatus.INTEGRATED.value]
        low, high = wilson_interval(integrated, runs)
        rows.append(
            {
                "condition": condition,
                "op_kind": op_kind,
                "runs": runs,
                **counts,
                "success_rate": integrated / runs if runs else 0.0,
                "ci_low": low,
                "ci_high": high,
            }
        )
    return rows


def accuracy_rows(
    docs: Iterable[Mapping[str, Any]],
    items: Sequence[BenchmarkItem],
    executors: Mapping[AgentKind, AgentExecutor] | None = None,
) -> list[dict[str, Any]]:
    """Per-condition answer accuracy on answer-checkable items, with the
    untouched gold and broken plans as reference rows."""
    checkable = [i for i in items if i.subset is Subset.STEPWISE_MATH]
    rows = []
    for label, pick in (
        ("gold_plan", lambda it: it.p_gold),
        ("broken_plan", lambda it: it.p_initial),
    ):
        correct = sum(
            1
            for it in checkable
            if value_equal(plan_answer(pick(it), executors), it.gold_answer)
        )
        rows.append(
            {
                "condition": label,
                "items": len(checkable),
                "correct": correct,
                "accuracy": correct / len(checkable) if checkable else 0.0,
            }
        )
    scored: dict[str, list[bool]] = {}
    for doc in docs:
        if doc.get("exec_correct") is None:
            continue
        scored.setdefault(str(doc["condition"]), []).append(bool(doc["exec_correct"]))
    for condition, flags in sorted(scored.items()):
        rows.append(
            {
                "condition": condition,
                "items": len(flags),
                "correct": sum(flags),
                "accuracy": sum(flags) / len(flags),
            }
        )
    return rows


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def _table_csv(columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _table_markdown(columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> str:
    table = [list(columns)] + [[_cell(row[c]) for c in columns] for row in rows]
    widths = [max(len(line[k]) for line in table) for k in range(len(columns))]
    lines = []
    for idx, line in enumerate(table):
        lines.append(
            "| " + " | ".join(cell.ljust(widths[k]) for k, cell in enumerate(line)) + " |"
        )
        if idx == 0:
            lines.append("|" + "|".join("-" * (w + 2) for w in widths) + "|")
    return "\n".join(lines) + "\n"


def write_reports(
    docs: Sequence[Mapping[str, Any]],
    items: Sequence[BenchmarkItem],
    out_dir: Path,
    execute_math: bool,
) -> None:
    out_dir = Path(out_dir)
    success = success_rows(docs)
    (out_dir / "success.csv").write_text(
        _table_csv(_SUCCESS_COLUMNS, success), encoding="utf-8"
    )
    (out_dir / "success.md").write_text(
        _table_markdown(_SUCCESS_COLUMNS, success), encoding="utf-8"
    )
    quality = aggregate(docs)
    (out_dir / "quality.csv").write_text(rows_to_csv(quality), encoding="utf-8")
    (out_dir / "quality.md").write_text(rows_to_markdown(quality), encoding="utf-8")
    if execute_math:
        accuracy = accuracy_rows(docs, items)
        (out_dir / "accuracy.csv").write_text(
            _table_csv(_ACCURACY_COLUMNS, accuracy), encoding="utf-8"
        )
        (out_dir / "accuracy.md").write_text(
            _table_markdown(_ACCURACY_COLUMNS, accuracy), encoding="utf-8"
        )


FeedbackFn = Callable[[str, Plan], str]
SelectionFn = Callable[[str, Plan], "SubgraphSelection | None"]


@dataclass(frozen=True)
class NaturalRunRecord:
    question: str
    status: str
    answer: Any | None
    detail: str | None = None
    mode: str | None = None


def repair_natural(
    questions: Iterable[str],
    backend: PlannerBackend,
    repair_backend: PlannerBackend,
    feedback_fn: FeedbackFn,
    select_fn: SelectionFn | None = None,
    executors: Mapping[AgentKind, AgentExecutor] | None = None,
) -> list[NaturalRunRecord]:
    """Generate a plan per question and give faulty ones a repair round.

    A generation that errors out or yields a structurally broken draft is
    recorded as "error". A plan that executes to a sink value is "ok". For
    the rest, feedback_fn writes repair feedback from the question and the
    faulty plan; when select_fn names a faulty subgraph the repair is
    targeted at it, otherwise the whole plan is revised. The record ends up
    "repaired" or "unrepaired" by whether the revision executes.
    """
    table = executors if executors is not None else build_executors()
    records: list[NaturalRunRecord] = []
    for question in questions:
        try:
            draft = backend.generate(question)
        except BackendError as exc:
            records.append(NaturalRunRecord(question, "error", None, str(exc)))
            continue
        report = validate_plan(draft, ValidationLevel.DRAFT)
        if not report.ok:
            codes = "; ".join(sorted(set(report.codes())))
            records.append(NaturalRunRecord(question, "error", None, codes))
            continue
        answer = plan_answer(draft, table)
        if answer is not None:
            records.append(NaturalRunRecord(question, "ok", answer))
            continue
        text = feedback_fn(question, draft)
        selection = select_fn(question, draft) if select_fn is not None else None
        if selection is None:
            mode = "gf"
            feedback = FeedbackText(
                text, FeedbackScope.GLOBAL, FeedbackStyle.ID_ANCHORED
            )
            outcome = revise_global(draft, feedback, (), repair_backend)
        else:
            mode = "tf"
            style = (
                FeedbackStyle.ID_ANCHORED
                if NODE_ID_TOKEN_RE.search(text)
                else FeedbackStyle.DEICTIC
            )
            feedback = FeedbackText(text, FeedbackScope.TARGETED, style)
            outcome = revise_targeted(
                draft, selection, feedback, FROZEN, False, repair_backend
            )
        if outcome.status is not RevisionStatus.INTEGRATED:
            records.append(
                NaturalRunRecord(question, "unrepaired", None, outcome.detail, mode)
            )
            continue
        assert outcome.plan is not None
        answer = plan_answer(outcome.plan, table)
        if answer is None:
            records.append(NaturalRunRecord(question, "unrepaired", None, None, mode))
        else:
            records.append(NaturalRunRecord(question, "repaired", answer, None, mode))
    return records

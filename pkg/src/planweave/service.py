"""HTTP service for interactive co-planning sessions.

Each session holds an immutable plan snapshot, an undo/redo history, and an
append-only event log. Mutations are serialized per session by compare-and-
swap on a monotone revision counter: every mutating request carries the
revision it was computed against and conflicts with 409 when the session has
moved on. Backend-driven mutations (generate, feedback, auto ops) run in a
worker thread and are observed by polling an operation id; local mutations
(edit ops, execute, undo, redo) commit synchronously.

Sessions persist under a data directory as a latest-snapshot file plus an
event log; loading replays the snapshot and reads the log only to list
events. Configured via PLANWEAVE_DATA_DIR and PLANWEAVE_PORT.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import revision as rev
from .diff import plan_diff
from .edits import SequenceFailure, apply_sequence, sequence_from_docs, sequence_to_docs
from .execution import (
    AgentExecutor,
    DependencyError,
    InvalidPlanError,
    UnboundVariableError,
    build_executors,
    execute_all,
    execute_node,
)
from .backends import PlannerBackend, build_backend
from .benchgen import FeedbackStyle
from .history import HistoryError, HistoryStack, record, redo, undo
from .model import (
    AgentKind,
    DiffSummary,
    NodeStatus,
    Plan,
    make_plan,
    selection_of,
)
from .reintegrate import FROZEN
from .serialize import ParseError, plan_from_doc, plan_to_doc
from .validate import ValidationReport


class EventKind(str, Enum):
    USER_MESSAGE = "user_message"
    SYSTEM_MESSAGE = "system_message"
    PLAN_GENERATED = "plan_generated"
    REPLANNED_GLOBAL = "replanned_global"
    REPLANNED_TARGETED = "replanned_targeted"
    DM_APPLIED = "dm_applied"
    AUTO_MERGE = "auto_merge"
    AUTO_SPLIT = "auto_split"
    EXECUTED_NODE = "executed_node"
    EXECUTED_ALL = "executed_all"
    UNDO = "undo"
    REDO = "redo"


@dataclass(frozen=True)
class InteractionEvent:
    seq: int
    timestamp: float
    kind: EventKind
    payload: Mapping[str, Any]


def event_to_doc(event: InteractionEvent) -> dict[str, Any]:
    return {
        "seq": event.seq,
        "timestamp": event.timestamp,
        "kind": event.kind.value,
        "payload": dict(event.payload),
    }


def event_from_doc(doc: Any) -> InteractionEvent:
    return InteractionEvent(
        seq=int(doc["seq"]),
        timestamp=float(doc["timestamp"]),
        kind=EventKind(doc["kind"]),
        payload=dict(doc["payload"]),
    )


def _diff_doc(diff: DiffSummary) -> dict[str, Any]:
    return {
        "nodes_added": list(diff.nodes_added),
        "nodes_removed": list(diff.nodes_removed),
        "nodes_modified": list(diff.nodes_modified),
        "edges_added": diff.edges_added,
        "edges_removed": diff.edges_removed,
        "text": diff.text,
    }


class CorruptStoreError(Exception):
    def __init__(self, file: str, detail: str):
        super().__init__(f"corrupt-store: {file}: {detail}")
        self.file = file
        self.detail = detail


class Operation:
    """Pollable state of one backend-driven mutation."""

    def __init__(self, op_id: str, kind: str):
        self.id = op_id
        self.kind = kind
        self.status = "pending"
        self.revision: int | None = None
        self.plan_doc: dict[str, Any] | None = None
        self.error: dict[str, Any] | None = None

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"id": self.id, "kind": self.kind, "status": self.status}
        if self.revision is not None:
            doc["revision"] = self.revision
        if self.plan_doc is not None:
            doc["plan"] = self.plan_doc
        if self.error is not None:
            doc["error"] = self.error
        return doc


class Session:
    """One co-planning session; all mutation happens under its lock."""

    def __init__(self, session_id: str, query: str):
        self.id = session_id
        self.query = query
        self.current: Plan = make_plan([], [])
        self.revision = 0
        self.history = HistoryStack()
        self.events: list[InteractionEvent] = []
        self.operations: dict[str, Operation] = {}
        self.lock = threading.Lock()

    def feedback_history(self) -> tuple[str, ...]:
        return tuple(
            str(e.payload["feedback"])
            for e in self.events
            if e.kind is EventKind.REPLANNED_GLOBAL and "feedback" in e.payload
        )


SNAPSHOT_FILE = "snapshot.json"
EVENTS_FILE = "events.jsonl"


def load_session(session_dir: Path) -> Session | None:
    """Restore one session from disk; None when the directory holds neither
    a snapshot nor an event log."""
    snapshot_path = session_dir / SNAPSHOT_FILE
    events_path = session_dir / EVENTS_FILE
    if not snapshot_path.exists():
        if events_path.exists():
            raise CorruptStoreError(str(snapshot_path), "snapshot missing")
        return None
    try:
        doc = json.loads(snapshot_path.read_text(encoding="utf-8"))
        session = Session(str(doc["id"]), str(doc["query"]))
        session.current = plan_from_doc(doc["plan"])
        session.revision = int(doc["revision"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, ParseError) as exc:
        raise CorruptStoreError(str(snapshot_path), str(exc)) from exc
    if events_path.exists():
        for index, line in enumerate(
            events_path.read_text(encoding="utf-8").splitlines()
        ):
            if not line.strip():
                continue
            try:
                session.events.append(event_from_doc(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorruptStoreError(
                    str(events_path), f"line {index + 1}: {exc}"
                ) from exc
    return session


class SessionStore:
    """In-memory session registry with optional file persistence."""

    def __init__(self, data_dir: str | Path | None = None):
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()
        if self.data_dir is not None and self.data_dir.exists():
            for entry in sorted(self.data_dir.iterdir()):
                if not entry.is_dir():
                    continue
                session = load_session(entry)
                if session is not None:
                    self.sessions[session.id] = session

    def create(self, query: str) -> Session:
        session = Session(uuid.uuid4().hex, query)
        with self.lock:
            self.sessions[session.id] = session
        self._write_snapshot(session)
        return session

    def get(self, session_id: str) -> Session:
        with self.lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(
                status_code=404,
                detail={"error": "unknown-session", "id": session_id},
            )
        return session

    def list_ids(self) -> list[dict[str, Any]]:
        with self.lock:
            sessions = sorted(self.sessions.values(), key=lambda s: s.id)
        return [
            {"id": s.id, "query": s.query, "revision": s.revision} for s in sessions
        ]

    def _write_snapshot(self, session: Session) -> None:
        if self.data_dir is None:
            return
        session_dir = self.data_dir / session.id
        session_dir.mkdir(parents=True, exist_ok=True)
        doc = {
            "id": session.id,
            "query": session.query,
            "revision": session.revision,
            "plan": plan_to_doc(session.current),
        }
        tmp = session_dir / (SNAPSHOT_FILE + ".tmp")
        tmp.write_text(
            json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        tmp.replace(session_dir / SNAPSHOT_FILE)

    def _append_event(self, session: Session, event: InteractionEvent) -> None:
        if self.data_dir is None:
            return
        session_dir = self.data_dir / session.id
        session_dir.mkdir(parents=True, exist_ok=True)
        with (session_dir / EVENTS_FILE).open("a", encoding="utf-8") as log:
            log.write(json.dumps(event_to_doc(event), ensure_ascii=False) + "\n")

    def commit(
        self,
        session: Session,
        new_plan: Plan,
        kind: EventKind,
        payload: Mapping[str, Any],
        record_undo: bool = True,
    ) -> InteractionEvent:
        """Replace the session plan and log exactly one event. Caller holds
        the session lock and has already checked the expected revision."""
        diff = plan_diff(session.current, new_plan)
        if record_undo:
            session.history = record(session.history, session.current)
        session.current = new_plan
        session.revision += 1
        event = InteractionEvent(
            seq=len(session.events),
            timestamp=time.time(),
            kind=kind,
            payload={**payload, "diff": _diff_doc(diff)},
        )
        session.events.append(event)
        self._write_snapshot(session)
        self._append_event(session, event)
        return event


def _conflict(expected: int, actual: int) -> HTTPException:
    return HTTPException(
        status_code=409,
        detail={"error": "revision-conflict", "expected": expected, "actual": actual},
    )


def _check_revision(session: Session, expected: int) -> None:
    if expected != session.revision:
        raise _conflict(expected, session.revision)


def _validation_detail(report: ValidationReport) -> dict[str, Any]:
    return {
        "error": "validation-failure",
        "violations": [
            {
                "code": v.code,
                "detail": v.detail,
                "node_ids": list(v.node_ids),
                "variable": v.variable,
            }
            for v in report.violations
        ],
    }


class CreateSessionBody(BaseModel):
    query: str


class RevisionBody(BaseModel):
    expected_revision: int


class FeedbackBody(RevisionBody):
    text: str


class TargetedFeedbackBody(RevisionBody):
    text: str
    node_ids: list[int]


class OpsBody(RevisionBody):
    ops: list[dict[str, Any]]


class MergeBody(RevisionBody):
    node_ids: list[int]


class SplitBody(RevisionBody):
    node_id: int


class ExecuteBody(RevisionBody):
    node_id: int | None = Field(default=None)


def _plan_payload(session: Session) -> dict[str, Any]:
    return {"revision": session.revision, "plan": plan_to_doc(session.current)}


def _results_payload(session: Session) -> dict[str, Any]:
    plan = session.current
    statuses = {str(i): n.status.value for i, n in plan.nodes.items()}
    sink: dict[str, Any] | None = None
    sink_ids = plan.sink_ids()
    if len(sink_ids) == 1:
        node = plan.nodes[sink_ids[0]]
        if node.status is NodeStatus.SUCCEEDED and node.trace is not None:
            sink = {"node_id": node.id, "values": dict(node.trace.values)}
    return {"revision": session.revision, "statuses": statuses, "sink": sink}


def _summarize_auto_op(diff: DiffSummary, verb: str) -> str:
    added = ", ".join(str(i) for i in diff.nodes_added) or "none"
    removed = ", ".join(str(i) for i in diff.nodes_removed) or "none"
    return f"{verb}: nodes removed {removed}; nodes added {added}"


def build_app(
    backend: PlannerBackend | None = None,
    data_dir: str | Path | None = None,
    fixtures: Mapping[str, Mapping[str, Any]] | None = None,
) -> FastAPI:
    """Assemble the service around one backend and one session store."""
    if backend is None:
        backend = build_backend("oracle")
    if data_dir is None:
        data_dir = os.environ.get("PLANWEAVE_DATA_DIR") or None
    store = SessionStore(data_dir)
    executors: Mapping[AgentKind, AgentExecutor] = build_executors(fixtures)

    app = FastAPI(title="planweave session service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.backend = backend

    def start_operation(
        session: Session,
        kind: EventKind,
        expected_revision: int,
        work: Any,
        payload_of: Any,
    ) -> dict[str, Any]:
        """Run one backend call off-thread; commit re-checks the revision so
        a session that moved on while the backend worked conflicts instead
        of clobbering."""
        with session.lock:
            _check_revision(session, expected_revision)
            op = Operation(uuid.uuid4().hex[:12], kind.value)
            session.operations[op.id] = op

        def runner() -> None:
            try:
                outcome = work()
            except Exception as exc:
                with session.lock:
                    op.status = "failed"
                    op.error = {"error": "internal", "detail": str(exc)}
                return
            with session.lock:
                if session.revision != expected_revision:
                    op.status = "failed"
                    op.error = {
                        "error": "revision-conflict",
                        "expected": expected_revision,
                        "actual": session.revision,
                    }
                    return
                if outcome.status is not rev.RevisionStatus.INTEGRATED:
                    op.status = "failed"
                    op.error = {
                        "error": outcome.status.value,
                        "detail": outcome.detail,
                    }
                    return
                assert outcome.plan is not None
                store.commit(
                    session, outcome.plan, kind, payload_of(outcome)
                )
                op.status = "done"
                op.revision = session.revision
                op.plan_doc = plan_to_doc(session.current)

        threading.Thread(target=runner, daemon=True).start()
        return {"operation_id": op.id, "status": op.status}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody) -> dict[str, Any]:
        session = store.create(body.query)
        return {"id": session.id, **_plan_payload(session)}

    @app.get("/sessions")
    def list_sessions() -> dict[str, Any]:
        return {"sessions": store.list_ids()}

    @app.get("/sessions/{session_id}/plan")
    def get_plan(session_id: str) -> dict[str, Any]:
        session = store.get(session_id)
        with session.lock:
            return _plan_payload(session)

    @app.get("/sessions/{session_id}/results")
    def get_results(session_id: str) -> dict[str, Any]:
        session = store.get(session_id)
        with session.lock:
            return _results_payload(session)

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str) -> dict[str, Any]:
        session = store.get(session_id)
        with session.lock:
            return {"events": [event_to_doc(e) for e in session.events]}

    @app.get("/sessions/{session_id}/operations/{op_id}")
    def get_operation(session_id: str, op_id: str) -> dict[str, Any]:
        session = store.get(session_id)
        with session.lock:
            op = session.operations.get(op_id)
            if op is None:
                raise HTTPException(
                    status_code=404,
                    detail={"error": "unknown-operation", "id": op_id},
                )
            return op.to_doc()

    @app.post("/sessions/{session_id}/generate")
    def generate(session_id: str, body: RevisionBody) -> dict[str, Any]:
        session = store.get(session_id)
        return start_operation(
            session,
            EventKind.PLAN_GENERATED,
            body.expected_revision,
            lambda: rev.generate(session.query, backend),
            lambda outcome: {"query": session.query},
        )

    @app.post("/sessions/{session_id}/feedback")
    def feedback(session_id: str, body: FeedbackBody) -> dict[str, Any]:
        session = store.get(session_id)
        text = rev.FeedbackText(
            body.text, rev.FeedbackScope.GLOBAL, FeedbackStyle.ID_ANCHORED
        )
        with session.lock:
            plan = session.current
            history = session.feedback_history()
        return start_operation(
            session,
            EventKind.REPLANNED_GLOBAL,
            body.expected_revision,
            lambda: rev.revise_global(plan, text, history, backend),
            lambda outcome: {"feedback": body.text},
        )

    def _parse_selection(session: Session, node_ids: list[int]):
        if not node_ids:
            raise HTTPException(
                status_code=422,
                detail={"error": "empty-selection"},
            )
        with session.lock:
            missing = [i for i in node_ids if not session.current.has_node(i)]
        if missing:
            raise HTTPException(
                status_code=422,
                detail={"error": "unknown-node", "node_ids": missing},
            )
        return selection_of(set(node_ids))

    @app.post("/sessions/{session_id}/feedback/targeted")
    def feedback_targeted(
        session_id: str, body: TargetedFeedbackBody
    ) -> dict[str, Any]:
        session = store.get(session_id)
        selection = _parse_selection(session, body.node_ids)
        style = (
            FeedbackStyle.ID_ANCHORED
            if rev.NODE_ID_TOKEN_RE.search(body.text)
            else FeedbackStyle.DEICTIC
        )
        text = rev.FeedbackText(body.text, rev.FeedbackScope.TARGETED, style)
        with session.lock:
            plan = session.current
        return start_operation(
            session,
            EventKind.REPLANNED_TARGETED,
            body.expected_revision,
            lambda: rev.revise_targeted(plan, selection, text, FROZEN, False, backend),
            lambda outcome: {
                "feedback": body.text,
                "node_ids": sorted(selection.node_ids),
                "touched_external": sorted(outcome.touched_external),
            },
        )

    @app.post("/sessions/{session_id}/auto-merge")
    def auto_merge(session_id: str, body: MergeBody) -> dict[str, Any]:
        session = store.get(session_id)
        selection = _parse_selection(session, body.node_ids)
        with session.lock:
            plan = session.current
        return start_operation(
            session,
            EventKind.AUTO_MERGE,
            body.expected_revision,
            lambda: rev.auto_merge(plan, selection, backend),
            lambda outcome: {
                "node_ids": sorted(selection.node_ids),
                "summary": _summarize_auto_op(
                    plan_diff(plan, outcome.plan), "merged"
                ),
            },
        )

    @app.post("/sessions/{session_id}/auto-split")
    def auto_split(session_id: str, body: SplitBody) -> dict[str, Any]:
        session = store.get(session_id)
        _parse_selection(session, [body.node_id])
        with session.lock:
            plan = session.current
        return start_operation(
            session,
            EventKind.AUTO_SPLIT,
            body.expected_revision,
            lambda: rev.auto_split(plan, body.node_id, backend),
            lambda outcome: {
                "node_id": body.node_id,
                "summary": _summarize_auto_op(
                    plan_diff(plan, outcome.plan), "split"
                ),
            },
        )

    @app.post("/sessions/{session_id}/ops")
    def apply_ops(session_id: str, body: OpsBody) -> dict[str, Any]:
        session = store.get(session_id)
        try:
            ops = sequence_from_docs(body.ops)
        except (ParseError, KeyError, TypeError, ValueError) as exc:
            raise HTTPException(
                status_code=422,
                detail={"error": "bad-op-doc", "detail": str(exc)},
            ) from exc
        with session.lock:
            _check_revision(session, body.expected_revision)
            try:
                new_plan = apply_sequence(session.current, ops)
            except SequenceFailure as exc:
                raise HTTPException(
                    status_code=422,
                    detail={
                        "error": "invalid-op",
                        "step": exc.step_index,
                        "detail": str(exc.error),
                    },
                ) from exc
            store.commit(
                session,
                new_plan,
                EventKind.DM_APPLIED,
                {"ops": sequence_to_docs(ops)},
            )
            return _plan_payload(session)

    @app.post("/sessions/{session_id}/execute")
    def execute(session_id: str, body: ExecuteBody) -> dict[str, Any]:
        session = store.get(session_id)
        with session.lock:
            _check_revision(session, body.expected_revision)
            try:
                if body.node_id is None:
                    new_plan, bundle = execute_all(session.current, executors)
                    payload: dict[str, Any] = {
                        "sink": None
                        if bundle is None
                        else {
                            "node_id": bundle.sink_id,
                            "values": dict(bundle.values),
                        }
                    }
                    kind = EventKind.EXECUTED_ALL
                else:
                    if not session.current.has_node(body.node_id):
                        raise HTTPException(
                            status_code=422,
                            detail={"error": "unknown-node", "node_ids": [body.node_id]},
                        )
                    new_plan = execute_node(session.current, body.node_id, executors)
                    payload = {
                        "node_id": body.node_id,
                        "status": new_plan.nodes[body.node_id].status.value,
                    }
                    kind = EventKind.EXECUTED_NODE
            except InvalidPlanError as exc:
                raise HTTPException(
                    status_code=422, detail=_validation_detail(exc.report)
                ) from exc
            except (DependencyError, UnboundVariableError) as exc:
                raise HTTPException(
                    status_code=422,
                    detail={"error": "execution-failure", "detail": str(exc)},
                ) from exc
            payload["statuses"] = {
                str(i): n.status.value for i, n in new_plan.nodes.items()
            }
            store.commit(session, new_plan, kind, payload)
            return {**_plan_payload(session), "results": _results_payload(session)}

    @app.post("/sessions/{session_id}/undo")
    def undo_endpoint(session_id: str, body: RevisionBody) -> dict[str, Any]:
        session = store.get(session_id)
        with session.lock:
            _check_revision(session, body.expected_revision)
            try:
                restored, session.history = undo(session.history, session.current)
            except HistoryError as exc:
                raise HTTPException(
                    status_code=422,
                    detail={"error": exc.code, "detail": exc.detail},
                ) from exc
            store.commit(session, restored, EventKind.UNDO, {}, record_undo=False)
            return _plan_payload(session)

    @app.post("/sessions/{session_id}/redo")
    def redo_endpoint(session_id: str, body: RevisionBody) -> dict[str, Any]:
        session = store.get(session_id)
        with session.lock:
            _check_revision(session, body.expected_revision)
            try:
                restored, session.history = redo(session.history, session.current)
            except HistoryError as exc:
                raise HTTPException(
                    status_code=422,
                    detail={"error": exc.code, "detail": exc.detail},
                ) from exc
            store.commit(session, restored, EventKind.REDO, {}, record_undo=False)
            return _plan_payload(session)

    return app


def serve(
    app: FastAPI | None = None,
    host: str = "127.0.0.1",
    port: int | None = None,
) -> None:
    import uvicorn

    if app is None:
        app = build_app()
    if port is None:
        port = int(os.environ.get("PLANWEAVE_PORT", "8787"))
    uvicorn.run(app, host=host, port=port, log_level="warning")

"""Snapshot-based undo/redo.

Plans are immutable values, so history is two stacks of snapshots. Recording
a new state clears the redo stack; depth is capped (oldest entries dropped)
at 100 states by default.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Plan

DEFAULT_CAP = 100


class HistoryError(ValueError):
    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


@dataclass(frozen=True)
class HistoryStack:
    past: tuple[Plan, ...] = ()
    future: tuple[Plan, ...] = ()
    cap: int = DEFAULT_CAP

    @property
    def can_undo(self) -> bool:
        return bool(self.past)

    @property
    def can_redo(self) -> bool:
        return bool(self.future)


def record(history: HistoryStack, snapshot: Plan) -> HistoryStack:
    """Push the pre-edit snapshot; any redo states are discarded."""
    past = history.past + (snapshot,)
    if len(past) > history.cap:
        past = past[-history.cap :]
    return HistoryStack(past=past, future=(), cap=history.cap)


def undo(history: HistoryStack, current: Plan) -> tuple[Plan, HistoryStack]:
    if not history.past:
        raise HistoryError("empty-history", "nothing to undo")
    restored = history.past[-1]
    return restored, HistoryStack(
        past=history.past[:-1],
        future=history.future + (current,),
        cap=history.cap,
    )


def redo(history: HistoryStack, current: Plan) -> tuple[Plan, HistoryStack]:
    if not history.future:
        raise HistoryError("empty-history", "nothing to redo")
    restored = history.future[-1]
    return restored, HistoryStack(
        past=history.past + (current,),
        future=history.future[:-1],
        cap=history.cap,
    )

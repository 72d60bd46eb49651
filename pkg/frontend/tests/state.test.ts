import { describe, expect, test } from "vitest";

import type { EventDoc } from "../src/api.js";
import {
  applyPlanResponse,
  applyServerEvents,
  dismissNotice,
  distinctLogKinds,
  newAppState,
  noticeTextFromError,
  pushNotice,
  recordUserMessage,
  summarizeEvent,
} from "../src/state.js";
import { demoPlan } from "./fixtures.js";

function event(seq: number, kind: string, text: string): EventDoc {
  return {
    seq,
    timestamp: 0,
    kind,
    payload: {
      diff: {
        nodes_added: [],
        nodes_removed: [],
        nodes_modified: [],
        edges_added: 0,
        edges_removed: 0,
        text,
      },
    },
  };
}

describe("activity log", () => {
  test("user messages appear as both bubble and log entry", () => {
    const state = newAppState();
    recordUserMessage(state, "plan something");
    expect(state.chat).toEqual([{ role: "user", text: "plan something" }]);
    expect(state.log).toEqual([
      { kind: "user_message", text: "plan something" },
    ]);
  });

  test("server events append once, in seq order, with diff text", () => {
    const state = newAppState();
    applyServerEvents(state, [
      event(1, "auto_merge", "merged"),
      event(0, "plan_generated", "5 nodes added"),
    ]);
    // A refetch replays the same events; nothing should double.
    applyServerEvents(state, [
      event(0, "plan_generated", "5 nodes added"),
      event(1, "auto_merge", "merged"),
      event(2, "executed_all", "statuses changed"),
    ]);
    expect(state.log.map((e) => e.kind)).toEqual([
      "plan_generated",
      "auto_merge",
      "executed_all",
    ]);
    expect(state.log[0]!.text).toBe("5 nodes added");
    expect(state.chat.map((m) => m.role)).toEqual(["system", "system", "system"]);
    expect(state.lastEventSeq).toBe(2);
  });

  test("distinctLogKinds keeps first-appearance order", () => {
    const state = newAppState();
    recordUserMessage(state, "go");
    applyServerEvents(state, [event(0, "plan_generated", "x")]);
    recordUserMessage(state, "tweak it");
    applyServerEvents(state, [event(1, "replanned_targeted", "y")]);
    expect(distinctLogKinds(state)).toEqual([
      "user_message",
      "plan_generated",
      "replanned_targeted",
    ]);
  });

  test("summarizeEvent falls back to the kind without a diff", () => {
    const bare: EventDoc = { seq: 0, timestamp: 0, kind: "undo", payload: {} };
    expect(summarizeEvent(bare)).toBe("undo");
    expect(summarizeEvent(event(0, "redo", "restored"))).toBe("restored");
  });
});

describe("plan adoption", () => {
  test("drops selection, traces, and positions for removed nodes", () => {
    const state = newAppState();
    state.selection = new Set([2, 3, 4]);
    state.expandedTraces = new Set([3, 5]);
    state.positions.set(3, { x: 1, y: 2 });
    state.positions.set(4, { x: 5, y: 6 });

    const plan = demoPlan();
    plan.nodes = plan.nodes.filter((n) => n.id !== 3);
    plan.edges = plan.edges.filter((e) => e.src_node !== 3 && e.dest_node !== 3);
    applyPlanResponse(state, { revision: 7, plan });

    expect(state.revision).toBe(7);
    expect([...state.selection].sort()).toEqual([2, 4]);
    expect([...state.expandedTraces]).toEqual([5]);
    expect(state.positions.has(3)).toBe(false);
    expect(state.positions.get(4)).toEqual({ x: 5, y: 6 });
  });
});

describe("notices", () => {
  test("push assigns increasing ids and dismiss removes one", () => {
    const state = newAppState();
    const a = pushNotice(state, "first");
    const b = pushNotice(state, "second");
    expect(a).not.toBe(b);
    dismissNotice(state, a);
    expect(state.notices.map((n) => n.text)).toEqual(["second"]);
  });

  test("error text spells out validation violations", () => {
    expect(
      noticeTextFromError({
        error: "validation-failure",
        violations: [
          { code: "no-sink", detail: "plan is empty", node_ids: [], variable: null },
          { code: "cycle-detected", detail: "nodes 1, 2", node_ids: [1, 2], variable: null },
        ],
      }),
    ).toBe(
      "validation-failure: no-sink: plan is empty; cycle-detected: nodes 1, 2",
    );
  });

  test("error text uses detail strings and bare codes", () => {
    expect(
      noticeTextFromError({ error: "invalid_op", detail: "not-contractible" }),
    ).toBe("invalid_op: not-contractible");
    expect(noticeTextFromError({ error: "empty-selection" })).toBe(
      "empty-selection",
    );
  });
});

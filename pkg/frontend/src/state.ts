/**
 * Client state and its transitions, kept free of DOM and network concerns.
 *
 * The view is a pure function of this state, and the state holds no plan
 * data of its own invention: the plan, revision, results, and event log all
 * come from the server verbatim. Local-only state is limited to selection,
 * composer mode, drag positions, expanded traces, notices, and the
 * user_message entries the chat composer appends to the activity log.
 */

import type { DiffDoc, EventDoc, PlanDoc, PlanResponse, ResultsDoc } from "./api.js";
import type { Point } from "./layout.js";

export type ComposerMode = "generate" | "global" | "targeted";

export interface ChatMessage {
  role: "user" | "system";
  text: string;
}

export interface ActivityEntry {
  kind: string;
  text: string;
}

export interface Notice {
  id: number;
  text: string;
}

export interface AppState {
  sessionId: string | null;
  query: string;
  revision: number;
  plan: PlanDoc | null;
  results: ResultsDoc | null;
  selection: Set<number>;
  mode: ComposerMode;
  pending: { opId: string; kind: string } | null;
  conflict: boolean;
  notices: Notice[];
  nextNoticeId: number;
  chat: ChatMessage[];
  log: ActivityEntry[];
  lastEventSeq: number;
  positions: Map<number, Point>;
  expandedTraces: Set<number>;
}

export function newAppState(): AppState {
  return {
    sessionId: null,
    query: "",
    revision: 0,
    plan: null,
    results: null,
    selection: new Set(),
    mode: "generate",
    pending: null,
    conflict: false,
    notices: [],
    nextNoticeId: 1,
    chat: [],
    log: [],
    lastEventSeq: -1,
    positions: new Map(),
    expandedTraces: new Set(),
  };
}

/** Chat submissions appear both as a user bubble and as a user_message
 * activity entry, ahead of whatever server event they cause. */
export function recordUserMessage(state: AppState, text: string): void {
  state.chat.push({ role: "user", text });
  state.log.push({ kind: "user_message", text });
}

/** Chat bubbles for server-side changes standardize on the diff text. */
export function summarizeEvent(event: EventDoc): string {
  const diff = event.payload.diff as DiffDoc | undefined;
  if (diff && diff.text) {
    return diff.text;
  }
  return event.kind;
}

/** Append events this client has not seen yet, in seq order, to both the
 * activity log and the chat's system bubbles. */
export function applyServerEvents(state: AppState, events: EventDoc[]): void {
  const fresh = events
    .filter((e) => e.seq > state.lastEventSeq)
    .sort((a, b) => a.seq - b.seq);
  for (const event of fresh) {
    const text = summarizeEvent(event);
    state.log.push({ kind: event.kind, text });
    state.chat.push({ role: "system", text: `${event.kind}: ${text}` });
    state.lastEventSeq = event.seq;
  }
}

/** Adopt a fetched plan and drop local references to ids it no longer has. */
export function applyPlanResponse(state: AppState, response: PlanResponse): void {
  state.plan = response.plan;
  state.revision = response.revision;
  const known = new Set(response.plan.nodes.map((n) => n.id));
  state.selection = new Set([...state.selection].filter((id) => known.has(id)));
  state.expandedTraces = new Set(
    [...state.expandedTraces].filter((id) => known.has(id)),
  );
  for (const id of [...state.positions.keys()]) {
    if (!known.has(id)) {
      state.positions.delete(id);
    }
  }
}

export function applyResults(state: AppState, results: ResultsDoc): void {
  state.results = results;
}

export function toggleSelected(state: AppState, nodeId: number): void {
  if (state.selection.has(nodeId)) {
    state.selection.delete(nodeId);
  } else {
    state.selection.add(nodeId);
  }
}

export function clearSelection(state: AppState): void {
  state.selection = new Set();
}

export function pushNotice(state: AppState, text: string): number {
  const id = state.nextNoticeId;
  state.nextNoticeId += 1;
  state.notices.push({ id, text });
  return id;
}

export function dismissNotice(state: AppState, id: number): void {
  state.notices = state.notices.filter((n) => n.id !== id);
}

/** One line per server error, with validation violations spelled out. */
export function noticeTextFromError(body: Record<string, unknown>): string {
  const error = typeof body["error"] === "string" ? body["error"] : "error";
  const violations = body["violations"];
  if (Array.isArray(violations) && violations.length > 0) {
    const parts = violations.map((v) => {
      const doc = v as Record<string, unknown>;
      return `${doc["code"]}: ${doc["detail"]}`;
    });
    return `${error}: ${parts.join("; ")}`;
  }
  const detail = body["detail"];
  if (typeof detail === "string" && detail.length > 0) {
    return `${error}: ${detail}`;
  }
  return error;
}

/** Activity-log kinds in order of first appearance. */
export function distinctLogKinds(state: AppState): string[] {
  const seen = new Set<string>();
  const kinds: string[] = [];
  for (const entry of state.log) {
    if (!seen.has(entry.kind)) {
      seen.add(entry.kind);
      kinds.push(entry.kind);
    }
  }
  return kinds;
}

/**
 * Full UI flow against a live session service with the scripted backend:
 * generate a plan, merge two selected nodes, replan one node with targeted
 * feedback, execute everything, and check the results and activity trail.
 * Merge gating for a non-contractible selection is checked on the way.
 */

import { afterAll, beforeAll, describe, expect, test } from "vitest";

import type { App } from "../src/app.js";
import { mountApp } from "../src/app.js";
import { distinctLogKinds } from "../src/state.js";
import type { ComposerMode } from "../src/state.js";
import { startServer } from "./server.js";
import type { TestServer } from "./server.js";

let server: TestServer;
let app: App;
let root: HTMLElement;

beforeAll(async () => {
  server = await startServer();
  root = document.createElement("div");
  document.body.appendChild(root);
  app = mountApp(root, server.baseUrl);
});

afterAll(async () => {
  await server.stop();
});

function q<T extends Element>(selector: string): T {
  const node = root.querySelector(selector);
  if (node === null) {
    throw new Error(`missing element: ${selector}`);
  }
  return node as T;
}

function clickNode(id: number): void {
  q<HTMLElement>(`.node-card[data-node-id="${id}"] .node-id`).click();
}

function nodeIds(): number[] {
  return (app.state.plan?.nodes ?? []).map((n) => n.id);
}

function taskOf(id: number): string {
  const node = app.state.plan?.nodes.find((n) => n.id === id);
  if (!node) {
    throw new Error(`no node ${id}`);
  }
  return node.task;
}

async function submitComposer(mode: ComposerMode, text: string): Promise<void> {
  if (app.state.mode !== mode) {
    const select = q<HTMLSelectElement>("#composer-mode");
    select.value = mode;
    select.dispatchEvent(new Event("change"));
  }
  const textarea = q<HTMLTextAreaElement>("#composer-text");
  textarea.value = text;
  q<HTMLFormElement>(".composer").dispatchEvent(
    new Event("submit", { cancelable: true }),
  );
  await app.idle();
}

const REWRITTEN_TASK =
  "Combine double_sum and square_diff into combo_value " +
  "{{expr combo_value: double_sum + square_diff}}";

describe("end-to-end session flow", () => {
  test("generating a plan from the first chat message", async () => {
    expect(q(".canvas-empty").textContent).toMatch(/Generate Plan/);
    await submitComposer("generate", "compute the final value");
    expect(app.state.sessionId).not.toBeNull();
    expect(app.state.revision).toBe(1);
    expect(nodeIds()).toEqual([1, 2, 3, 4, 5]);
    expect(root.querySelectorAll(".node-card").length).toBe(5);
    expect(q(".session-label").textContent).toContain("rev 1");
    expect(app.state.conflict).toBe(false);
  });

  test("auto-merging two selected nodes", async () => {
    clickNode(2);
    clickNode(3);
    expect(root.querySelectorAll(".node-card.selected").length).toBe(2);
    const autoMerge = q<HTMLButtonElement>("#btn-auto-merge");
    expect(autoMerge.disabled).toBe(false);
    autoMerge.click();
    await app.idle();
    expect(app.state.revision).toBe(2);
    expect(nodeIds()).toEqual([1, 4, 5, 6]);
    // The merged nodes are gone, so the selection was pruned.
    expect(app.state.selection.size).toBe(0);
  });

  test("merge stays disabled for a non-contractible selection", async () => {
    clickNode(1);
    clickNode(4);
    expect(q<HTMLButtonElement>("#btn-merge").disabled).toBe(true);
    expect(q<HTMLButtonElement>("#btn-auto-merge").disabled).toBe(true);
    const notice = q("#merge-notice");
    expect(notice.textContent).toMatch(/not contractible/);
    expect(notice.textContent).toMatch(/cycle/);

    q<HTMLButtonElement>("#btn-clear-selection").click();
    clickNode(4);
    clickNode(5);
    expect(q<HTMLButtonElement>("#btn-merge").disabled).toBe(false);
    expect(q<HTMLButtonElement>("#btn-auto-merge").disabled).toBe(false);
    expect(root.querySelector("#merge-notice")).toBeNull();
    q<HTMLButtonElement>("#btn-clear-selection").click();
  });

  test("targeted replan rewrites only the selected node", async () => {
    const before = new Map(nodeIds().map((id) => [id, taskOf(id)]));
    clickNode(4);
    const option = q<HTMLOptionElement>('#composer-mode option[value="targeted"]');
    expect(option.disabled).toBe(false);
    await submitComposer(
      "targeted",
      `Rewrite the task of the selected node to: "${REWRITTEN_TASK}".`,
    );
    expect(app.state.revision).toBe(3);
    expect(nodeIds()).toEqual([1, 4, 5, 6]);
    expect(taskOf(4)).toBe(REWRITTEN_TASK);
    for (const id of [1, 5, 6]) {
      expect(taskOf(id)).toBe(before.get(id));
    }
    expect(app.state.conflict).toBe(false);
    expect(app.state.notices).toEqual([]);
  });

  test("execute all surfaces results and the activity trail", async () => {
    q<HTMLButtonElement>("#btn-execute-all").click();
    await app.idle();
    expect(app.state.revision).toBe(4);

    const sink = q("#results-sink");
    expect(sink.textContent).toContain("Sink node #5");
    expect(sink.textContent).toContain("final_value = 56");

    const chips = [...root.querySelectorAll(".status-chip")];
    expect(chips.length).toBe(4);
    for (const chip of chips) {
      expect(chip.className).toContain("succeeded");
    }
    expect(
      q('.node-card[data-node-id="5"] .status-dot').textContent,
    ).toBe("succeeded");

    const kinds = [...root.querySelectorAll("#activity-log .log-entry")].map(
      (entry) => entry.getAttribute("data-kind"),
    );
    expect(kinds).toEqual([
      "user_message",
      "plan_generated",
      "auto_merge",
      "user_message",
      "replanned_targeted",
      "executed_all",
    ]);
    expect(distinctLogKinds(app.state)).toEqual([
      "user_message",
      "plan_generated",
      "auto_merge",
      "replanned_targeted",
      "executed_all",
    ]);
    expect(app.state.conflict).toBe(false);
    expect(app.state.notices).toEqual([]);
  });
});

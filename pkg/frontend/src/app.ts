/**
 * Controller: owns the state, talks to the session service, repaints.
 *
 * UI actions are serialized through one promise chain (single writer per
 * tab); each action issues exactly one mutating API call computed against
 * the revision on screen, then refreshes plan, results, and events from the
 * server. A 409 (or a pending operation that lost its race) raises the
 * conflict banner instead of retrying silently.
 */

import { ApiClient, ApiError } from "./api.js";
import type { EdgeDoc, NodeDoc, OperationDoc, PlanResponse } from "./api.js";
import type { Handlers } from "./render.js";
import { renderApp } from "./render.js";
import {
  applyPlanResponse,
  applyResults,
  applyServerEvents,
  clearSelection,
  dismissNotice,
  newAppState,
  noticeTextFromError,
  pushNotice,
  recordUserMessage,
  toggleSelected,
} from "./state.js";
import type { AppState, ComposerMode } from "./state.js";

/** Inputs a merged node must keep: bindings of selected nodes whose
 * variable is not produced inside the selection. */
function mergedSpec(nodes: NodeDoc[]): Record<string, unknown> {
  const produced = new Set(nodes.flatMap((n) => n.output));
  const inputs: { variable: string; value: string }[] = [];
  const seen = new Set<string>();
  for (const node of nodes) {
    for (const binding of node.input) {
      if (!produced.has(binding.variable) && !seen.has(binding.variable)) {
        seen.add(binding.variable);
        inputs.push({ variable: binding.variable, value: binding.value });
      }
    }
  }
  return {
    task: nodes.map((n) => n.task).join(" "),
    agent_name: nodes[0]!.agent_name,
    input: inputs,
    output: [...new Set(nodes.flatMap((n) => n.output))],
  };
}

export class App implements Handlers {
  readonly api: ApiClient;
  readonly state: AppState;
  private readonly root: HTMLElement;
  private work: Promise<void> = Promise.resolve();

  constructor(root: HTMLElement, api: ApiClient) {
    this.root = root;
    this.api = api;
    this.state = newAppState();
  }

  start(): void {
    this.render();
  }

  /** Resolves when every action queued so far has settled; test hook. */
  idle(): Promise<void> {
    return this.work;
  }

  render(): void {
    renderApp(this.root, this.state, this);
  }

  private enqueue(action: () => Promise<void>): void {
    this.work = this.work.then(action).catch((error) => {
      this.fail(error);
    });
  }

  private fail(error: unknown): void {
    if (error instanceof ApiError) {
      if (error.isConflict) {
        this.state.conflict = true;
      } else {
        pushNotice(this.state, noticeTextFromError(error.body));
      }
    } else {
      pushNotice(this.state, String(error));
    }
    this.render();
  }

  private async refresh(): Promise<void> {
    const sid = this.state.sessionId;
    if (sid === null) {
      return;
    }
    const [plan, results, events] = await Promise.all([
      this.api.getPlan(sid),
      this.api.getResults(sid),
      this.api.getEvents(sid),
    ]);
    applyPlanResponse(this.state, plan);
    applyResults(this.state, results);
    applyServerEvents(this.state, events.events);
    this.render();
  }

  /** Start a backend-driven mutation and poll it to completion. */
  private async runOperation(
    kind: string,
    begin: () => Promise<{ operation_id: string }>,
  ): Promise<void> {
    const sid = this.state.sessionId;
    if (sid === null) {
      return;
    }
    const started = await begin();
    this.state.pending = { opId: started.operation_id, kind };
    this.render();
    let op: OperationDoc;
    try {
      op = await this.api.pollOperation(sid, started.operation_id);
    } finally {
      this.state.pending = null;
    }
    if (op.status === "failed" && op.error) {
      if (op.error["error"] === "revision-conflict") {
        this.state.conflict = true;
      } else {
        pushNotice(this.state, noticeTextFromError(op.error));
      }
    }
    await this.refresh();
  }

  /** Every direct-manipulation button maps to one POST /ops call. */
  private applyOps(ops: Record<string, unknown>[]): void {
    this.enqueue(async () => {
      const sid = this.state.sessionId;
      if (sid === null) {
        return;
      }
      await this.api.applyOps(sid, this.state.revision, ops);
      await this.refresh();
    });
  }

  onComposerSubmit(mode: ComposerMode, text: string): void {
    this.enqueue(async () => {
      recordUserMessage(this.state, text);
      this.render();
      if (mode === "generate") {
        const created = await this.api.createSession(text);
        this.state.sessionId = created.id;
        this.state.query = text;
        applyPlanResponse(this.state, created);
        this.state.lastEventSeq = -1;
        this.state.results = null;
        await this.runOperation("generate", () =>
          this.api.generate(created.id, created.revision),
        );
      } else if (mode === "global") {
        await this.runOperation("replan", () =>
          this.api.feedback(this.state.sessionId!, this.state.revision, text),
        );
      } else {
        const nodeIds = [...this.state.selection].sort((a, b) => a - b);
        await this.runOperation("targeted replan", () =>
          this.api.feedbackTargeted(
            this.state.sessionId!,
            this.state.revision,
            text,
            nodeIds,
          ),
        );
      }
    });
  }

  onModeChange(mode: ComposerMode): void {
    this.state.mode = mode;
    this.render();
  }

  onToggleSelect(nodeId: number): void {
    toggleSelected(this.state, nodeId);
    this.render();
  }

  onClearSelection(): void {
    clearSelection(this.state);
    this.render();
  }

  onMerge(): void {
    const plan = this.state.plan;
    if (plan === null) {
      return;
    }
    const ids = [...this.state.selection].sort((a, b) => a - b);
    const nodes = plan.nodes.filter((n) => this.state.selection.has(n.id));
    this.applyOps([
      { op: "merge_nodes", node_ids: ids, merged: mergedSpec(nodes) },
    ]);
  }

  onAutoMerge(): void {
    const nodeIds = [...this.state.selection].sort((a, b) => a - b);
    this.enqueue(() =>
      this.runOperation("auto-merge", () =>
        this.api.autoMerge(this.state.sessionId!, this.state.revision, nodeIds),
      ),
    );
  }

  onAutoSplit(nodeId: number): void {
    this.enqueue(() =>
      this.runOperation("auto-split", () =>
        this.api.autoSplit(this.state.sessionId!, this.state.revision, nodeId),
      ),
    );
  }

  onExecuteAll(): void {
    this.enqueue(async () => {
      const response = await this.api.execute(
        this.state.sessionId!,
        this.state.revision,
      );
      applyPlanResponse(this.state, response);
      applyResults(this.state, response.results);
      await this.refresh();
    });
  }

  onExecuteNode(nodeId: number): void {
    this.enqueue(async () => {
      const response = await this.api.execute(
        this.state.sessionId!,
        this.state.revision,
        nodeId,
      );
      applyPlanResponse(this.state, response);
      applyResults(this.state, response.results);
      await this.refresh();
    });
  }

  onUndo(): void {
    this.enqueue(async () => {
      await this.api.undo(this.state.sessionId!, this.state.revision);
      await this.refresh();
    });
  }

  onRedo(): void {
    this.enqueue(async () => {
      await this.api.redo(this.state.sessionId!, this.state.revision);
      await this.refresh();
    });
  }

  onAddNode(): void {
    const plan = this.state.plan;
    if (plan === null) {
      return;
    }
    this.applyOps([
      {
        op: "add_node",
        node: {
          task: "Describe this step",
          agent_name: "math",
          input: [],
          output: [`out_${plan.next_id}`],
        },
      },
    ]);
  }

  onDeleteNode(nodeId: number): void {
    this.applyOps([{ op: "delete_node", id: nodeId }]);
  }

  onDuplicateNode(nodeId: number): void {
    this.applyOps([{ op: "duplicate_node", id: nodeId }]);
  }

  onTaskEdited(nodeId: number, task: string): void {
    this.applyOps([{ op: "set_task", id: nodeId, task }]);
  }

  onAgentChanged(nodeId: number, agent: string): void {
    this.applyOps([{ op: "set_agent", id: nodeId, agent_name: agent }]);
  }

  onInputValueEdited(nodeId: number, variable: string, value: string): void {
    const node = this.state.plan?.nodes.find((n) => n.id === nodeId);
    if (!node) {
      return;
    }
    const input = node.input.map((b) =>
      b.variable === variable ? { variable, value } : { ...b },
    );
    this.applyOps([{ op: "set_inputs", id: nodeId, input }]);
  }

  onOutputsEdited(nodeId: number, outputs: string[]): void {
    this.applyOps([{ op: "set_outputs", id: nodeId, output: outputs }]);
  }

  onLinkEdge(edge: EdgeDoc): void {
    this.applyOps([{ op: "add_edge", edge: { ...edge } }]);
  }

  onUnlinkEdge(edge: EdgeDoc): void {
    this.applyOps([{ op: "delete_edge", edge: { ...edge } }]);
  }

  onToggleTrace(nodeId: number): void {
    if (this.state.expandedTraces.has(nodeId)) {
      this.state.expandedTraces.delete(nodeId);
    } else {
      this.state.expandedTraces.add(nodeId);
    }
    this.render();
  }

  onDismissNotice(id: number): void {
    dismissNotice(this.state, id);
    this.render();
  }
}

export function mountApp(root: HTMLElement, baseUrl: string): App {
  const app = new App(root, new ApiClient(baseUrl));
  app.start();
  return app;
}

export type { PlanResponse };

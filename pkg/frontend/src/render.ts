/**
 * DOM view of the app state. renderApp repaints the whole tree from scratch
 * each time: the view is a pure function of (server plan, local selection,
 * in-flight operation state), so a hard refresh reproduces the same page.
 *
 * No handler mutates plan data locally; every callback the view invokes is
 * expected to issue exactly one API call and then refresh.
 */

import type { EdgeDoc, NodeDoc, PlanDoc, TraceDoc } from "./api.js";
import { mergeBlocker } from "./graph.js";
import {
  NODE_HEIGHT,
  NODE_WIDTH,
  layoutExtent,
  layoutPlan,
} from "./layout.js";
import type { AppState, ComposerMode } from "./state.js";

export const AGENT_NAMES = ["math", "search", "code", "commonsense"] as const;

export interface Handlers {
  onComposerSubmit(mode: ComposerMode, text: string): void;
  onModeChange(mode: ComposerMode): void;
  onToggleSelect(nodeId: number): void;
  onClearSelection(): void;
  onMerge(): void;
  onAutoMerge(): void;
  onAutoSplit(nodeId: number): void;
  onExecuteAll(): void;
  onExecuteNode(nodeId: number): void;
  onUndo(): void;
  onRedo(): void;
  onAddNode(): void;
  onDeleteNode(nodeId: number): void;
  onDuplicateNode(nodeId: number): void;
  onTaskEdited(nodeId: number, task: string): void;
  onAgentChanged(nodeId: number, agent: string): void;
  onInputValueEdited(nodeId: number, variable: string, value: string): void;
  onOutputsEdited(nodeId: number, outputs: string[]): void;
  onLinkEdge(edge: EdgeDoc): void;
  onUnlinkEdge(edge: EdgeDoc): void;
  onToggleTrace(nodeId: number): void;
  onDismissNotice(id: number): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function button(
  id: string,
  label: string,
  onClick: () => void,
  disabled = false,
): HTMLButtonElement {
  const b = el("button", "btn", label);
  b.id = id;
  b.disabled = disabled;
  b.addEventListener("click", onClick);
  return b;
}

function edgeKey(edge: EdgeDoc): string {
  return `${edge.src_node}:${edge.src_output}->${edge.dest_node}:${edge.dest_input}`;
}

function renderBanners(state: AppState, handlers: Handlers): HTMLElement {
  const wrap = el("div", "banners");
  if (state.conflict) {
    const banner = el(
      "div",
      "banner conflict",
      "Plan changed on the server: review the latest plan and retry.",
    );
    banner.id = "conflict-banner";
    wrap.appendChild(banner);
  }
  const notices = el("div");
  notices.id = "notices";
  for (const notice of state.notices) {
    const item = el("div", "notice");
    item.appendChild(el("span", "notice-text", notice.text));
    const dismiss = el("button", "notice-dismiss", "dismiss");
    dismiss.addEventListener("click", () => handlers.onDismissNotice(notice.id));
    item.appendChild(dismiss);
    notices.appendChild(item);
  }
  wrap.appendChild(notices);
  return wrap;
}

function renderChatPanel(state: AppState, handlers: Handlers): HTMLElement {
  const panel = el("section", "chat-panel");

  const messages = el("div", "chat-messages");
  messages.id = "chat-messages";
  for (const message of state.chat) {
    messages.appendChild(el("div", `bubble ${message.role}`, message.text));
  }
  panel.appendChild(messages);

  const log = el("div", "activity-log");
  log.id = "activity-log";
  log.appendChild(el("h3", "panel-title", "Activity"));
  for (const entry of state.log) {
    const item = el("div", "log-entry", `${entry.kind}: ${entry.text}`);
    item.dataset["kind"] = entry.kind;
    log.appendChild(item);
  }
  panel.appendChild(log);

  const composer = el("form", "composer");
  const mode = el("select") as HTMLSelectElement;
  mode.id = "composer-mode";
  const options: [ComposerMode, string][] = [
    ["generate", "Generate Plan"],
    ["global", "Entire Replan"],
    ["targeted", "Targeted Replan"],
  ];
  for (const [value, label] of options) {
    const option = el("option", undefined, label) as HTMLOptionElement;
    option.value = value;
    // Targeted replanning needs a selection to aim at.
    if (value === "targeted" && state.selection.size === 0) {
      option.disabled = true;
    }
    mode.appendChild(option);
  }
  mode.value = state.mode;
  mode.addEventListener("change", () =>
    handlers.onModeChange(mode.value as ComposerMode),
  );
  composer.appendChild(mode);

  const text = el("textarea") as HTMLTextAreaElement;
  text.id = "composer-text";
  text.placeholder =
    state.mode === "generate"
      ? "Describe the task to plan"
      : "Describe the change you want";
  composer.appendChild(text);

  const send = el("button", "btn primary", "Send") as HTMLButtonElement;
  send.id = "composer-send";
  send.type = "submit";
  send.disabled = state.pending !== null;
  composer.appendChild(send);

  composer.addEventListener("submit", (event) => {
    event.preventDefault();
    const value = text.value.trim();
    if (value.length > 0) {
      handlers.onComposerSubmit(state.mode, value);
    }
  });
  panel.appendChild(composer);
  return panel;
}

function renderToolbar(state: AppState, handlers: Handlers): HTMLElement {
  const bar = el("div", "toolbar");
  const busy = state.pending !== null;
  const plan = state.plan;
  const selection = state.selection;

  bar.appendChild(
    button(
      "btn-add-node",
      "Add node",
      () => handlers.onAddNode(),
      busy || plan === null,
    ),
  );
  bar.appendChild(button("btn-undo", "Undo", () => handlers.onUndo(), busy));
  bar.appendChild(button("btn-redo", "Redo", () => handlers.onRedo(), busy));
  bar.appendChild(
    button(
      "btn-execute-all",
      "Execute All",
      () => handlers.onExecuteAll(),
      busy || plan === null || plan.nodes.length === 0,
    ),
  );

  const blocker = plan === null ? "no plan yet" : mergeBlocker(plan, selection);
  bar.appendChild(
    button("btn-merge", "Merge", () => handlers.onMerge(), busy || blocker !== null),
  );
  bar.appendChild(
    button(
      "btn-auto-merge",
      "Auto-merge",
      () => handlers.onAutoMerge(),
      busy || blocker !== null,
    ),
  );
  if (blocker !== null && selection.size >= 2) {
    const notice = el("span", "inline-notice", blocker);
    notice.id = "merge-notice";
    bar.appendChild(notice);
  }

  bar.appendChild(
    button(
      "btn-clear-selection",
      `Clear selection (${selection.size})`,
      () => handlers.onClearSelection(),
      selection.size === 0,
    ),
  );

  if (busy) {
    const spinner = el("span", "spinner", `working: ${state.pending!.kind}`);
    spinner.id = "pending-spinner";
    bar.appendChild(spinner);
  }
  return bar;
}

function renderTrace(trace: TraceDoc): HTMLElement {
  const block = el("div", "trace-block");
  if (trace.agent === "math") {
    // Math traces show the generated expressions and the computed results.
    const expressions = (trace.structured["expressions"] ?? {}) as Record<
      string,
      string
    >;
    const list = el("dl", "trace-expressions");
    for (const [name, expr] of Object.entries(expressions)) {
      list.appendChild(el("dt", undefined, `${name} = ${expr}`));
      list.appendChild(el("dd", undefined, String(trace.values[name] ?? "")));
    }
    block.appendChild(list);
  } else {
    for (const [key, value] of Object.entries(trace.structured)) {
      block.appendChild(
        el("div", "trace-field", `${key}: ${JSON.stringify(value)}`),
      );
    }
  }
  const raw = el("pre", "trace-raw", trace.raw_log);
  block.appendChild(raw);
  return block;
}

function renderNodeCard(
  state: AppState,
  node: NodeDoc,
  handlers: Handlers,
): HTMLElement {
  const card = el("div", "node-card");
  card.dataset["nodeId"] = String(node.id);
  if (state.selection.has(node.id)) {
    card.classList.add("selected");
  }

  const head = el("div", "node-head");
  const idLabel = el("span", "node-id", `#${node.id}`);
  idLabel.addEventListener("click", () => handlers.onToggleSelect(node.id));
  head.appendChild(idLabel);

  const agent = el("select", "agent-badge") as HTMLSelectElement;
  agent.dataset["agent"] = node.agent_name;
  for (const name of AGENT_NAMES) {
    const option = el("option", undefined, name) as HTMLOptionElement;
    option.value = name;
    agent.appendChild(option);
  }
  agent.value = node.agent_name;
  agent.addEventListener("change", () =>
    handlers.onAgentChanged(node.id, agent.value),
  );
  head.appendChild(agent);

  const status = node.status ?? "pending";
  const dot = el("span", "status-dot", status);
  dot.dataset["status"] = status;
  head.appendChild(dot);
  card.appendChild(head);

  const task = el("textarea", "task-input") as HTMLTextAreaElement;
  task.value = node.task;
  task.addEventListener("change", () => handlers.onTaskEdited(node.id, task.value));
  card.appendChild(task);

  const io = el("div", "node-io");
  for (const binding of node.input) {
    const row = el("div", "io-row");
    row.appendChild(el("span", "io-var", binding.variable));
    const value = el("input", "io-value") as HTMLInputElement;
    value.value = binding.value;
    value.addEventListener("change", () =>
      handlers.onInputValueEdited(node.id, binding.variable, value.value),
    );
    row.appendChild(value);
    io.appendChild(row);
  }
  const outputs = el("input", "io-outputs") as HTMLInputElement;
  outputs.value = node.output.join(", ");
  outputs.addEventListener("change", () =>
    handlers.onOutputsEdited(
      node.id,
      outputs.value
        .split(",")
        .map((s) => s.trim())
        .filter((s) => s.length > 0),
    ),
  );
  io.appendChild(outputs);
  card.appendChild(io);

  const foot = el("div", "node-foot");
  const mk = (label: string, onClick: () => void): void => {
    const b = el("button", "btn small", label);
    b.disabled = state.pending !== null;
    b.addEventListener("click", onClick);
    foot.appendChild(b);
  };
  mk("run", () => handlers.onExecuteNode(node.id));
  mk("duplicate", () => handlers.onDuplicateNode(node.id));
  mk("delete", () => handlers.onDeleteNode(node.id));
  mk("auto-split", () => handlers.onAutoSplit(node.id));
  if (node.trace) {
    mk(state.expandedTraces.has(node.id) ? "hide trace" : "trace", () =>
      handlers.onToggleTrace(node.id),
    );
  }
  card.appendChild(foot);

  if (node.trace && state.expandedTraces.has(node.id)) {
    card.appendChild(renderTrace(node.trace));
  }
  return card;
}

function renderEdges(plan: PlanDoc, handlers: Handlers): HTMLElement {
  const positions = layoutPlan(plan);
  const svgNs = "http://www.w3.org/2000/svg";
  const extent = layoutExtent(positions);
  const svg = document.createElementNS(svgNs, "svg");
  svg.setAttribute("class", "edge-layer");
  svg.setAttribute("width", String(extent.x));
  svg.setAttribute("height", String(extent.y));

  const labels = el("div", "edge-labels");
  for (const edge of plan.edges) {
    const from = positions.get(edge.src_node);
    const to = positions.get(edge.dest_node);
    if (!from || !to) {
      continue;
    }
    const x1 = from.x + NODE_WIDTH;
    const y1 = from.y + NODE_HEIGHT / 2;
    const x2 = to.x;
    const y2 = to.y + NODE_HEIGHT / 2;
    const line = document.createElementNS(svgNs, "line");
    line.setAttribute("x1", String(x1));
    line.setAttribute("y1", String(y1));
    line.setAttribute("x2", String(x2));
    line.setAttribute("y2", String(y2));
    svg.appendChild(line);

    const label = el("span", "edge-label");
    label.dataset["edge"] = edgeKey(edge);
    label.style.left = `${(x1 + x2) / 2}px`;
    label.style.top = `${(y1 + y2) / 2}px`;
    label.appendChild(
      el(
        "span",
        "edge-var",
        edge.src_output === edge.dest_input
          ? edge.src_output
          : `${edge.src_output} as ${edge.dest_input}`,
      ),
    );
    const unlink = el("button", "edge-unlink", "x");
    unlink.title = "remove edge";
    unlink.addEventListener("click", () => handlers.onUnlinkEdge(edge));
    label.appendChild(unlink);
    labels.appendChild(label);
  }

  const wrap = el("div", "edge-wrap");
  wrap.appendChild(svg);
  wrap.appendChild(labels);
  return wrap;
}

function renderLinkForm(plan: PlanDoc, handlers: Handlers): HTMLElement {
  const form = el("form", "link-form");
  form.id = "link-form";

  const srcNode = el("select") as HTMLSelectElement;
  srcNode.id = "link-src-node";
  const destNode = el("select") as HTMLSelectElement;
  destNode.id = "link-dest-node";
  const srcOutput = el("input") as HTMLInputElement;
  srcOutput.id = "link-src-output";
  srcOutput.placeholder = "output variable";
  const destInput = el("input") as HTMLInputElement;
  destInput.id = "link-dest-input";
  destInput.placeholder = "input variable";

  for (const node of plan.nodes) {
    for (const select of [srcNode, destNode]) {
      const option = el("option", undefined, `#${node.id}`) as HTMLOptionElement;
      option.value = String(node.id);
      select.appendChild(option);
    }
  }

  const link = el("button", "btn small", "Link") as HTMLButtonElement;
  link.id = "link-submit";
  link.type = "submit";

  form.append(srcNode, srcOutput, destNode, destInput, link);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (srcOutput.value && destInput.value) {
      handlers.onLinkEdge({
        src_node: Number(srcNode.value),
        dest_node: Number(destNode.value),
        src_output: srcOutput.value,
        dest_input: destInput.value,
      });
    }
  });
  return form;
}

function renderResults(state: AppState): HTMLElement {
  const panel = el("section", "results-panel");
  panel.id = "results-panel";
  panel.appendChild(el("h3", "panel-title", "Results"));
  const results = state.results;
  if (results === null) {
    panel.appendChild(el("div", "results-empty", "Nothing executed yet."));
    return panel;
  }
  const statuses = el("div", "results-statuses");
  for (const [id, status] of Object.entries(results.statuses)) {
    const chip = el("span", `status-chip ${status}`, `#${id}: ${status}`);
    chip.dataset["nodeId"] = id;
    statuses.appendChild(chip);
  }
  panel.appendChild(statuses);
  if (results.sink) {
    const sink = el("div", "results-sink");
    sink.id = "results-sink";
    sink.appendChild(
      el("div", "sink-title", `Sink node #${results.sink.node_id}`),
    );
    for (const [name, value] of Object.entries(results.sink.values)) {
      sink.appendChild(el("div", "sink-value", `${name} = ${String(value)}`));
    }
    panel.appendChild(sink);
  } else {
    panel.appendChild(
      el("div", "results-empty", "No sink value: run Execute All to completion."),
    );
  }
  return panel;
}

function renderCanvas(state: AppState, handlers: Handlers): HTMLElement {
  const panel = el("section", "canvas-panel");
  panel.appendChild(renderToolbar(state, handlers));
  const plan = state.plan;
  if (plan === null || plan.nodes.length === 0) {
    panel.appendChild(
      el("div", "canvas-empty", "No plan yet: use Generate Plan in the chat."),
    );
    return panel;
  }
  const canvas = el("div", "canvas");
  const positions = layoutPlan(plan, state.positions);
  const extent = layoutExtent(positions);
  canvas.style.width = `${extent.x}px`;
  canvas.style.height = `${extent.y}px`;
  canvas.appendChild(renderEdges(plan, handlers));
  for (const node of plan.nodes) {
    const card = renderNodeCard(state, node, handlers);
    const point = positions.get(node.id);
    if (point) {
      card.style.left = `${point.x}px`;
      card.style.top = `${point.y}px`;
    }
    canvas.appendChild(card);
  }
  panel.appendChild(canvas);
  panel.appendChild(renderLinkForm(plan, handlers));
  panel.appendChild(renderResults(state));
  return panel;
}

export function renderApp(
  root: HTMLElement,
  state: AppState,
  handlers: Handlers,
): void {
  const app = el("div", "app");
  const header = el("header", "app-header");
  header.appendChild(el("h1", undefined, "planweave"));
  header.appendChild(
    el(
      "span",
      "session-label",
      state.sessionId === null
        ? "no session"
        : `session ${state.sessionId.slice(0, 8)} rev ${state.revision}`,
    ),
  );
  app.appendChild(header);
  app.appendChild(renderBanners(state, handlers));

  const columns = el("div", "columns");
  columns.appendChild(renderChatPanel(state, handlers));
  columns.appendChild(renderCanvas(state, handlers));
  app.appendChild(columns);

  root.replaceChildren(app);
}

/**
 * Graph queries over plan documents, used for button enablement and layout.
 *
 * These mirror the server's own checks so the UI can disable an action it
 * knows would be rejected; the server remains authoritative and the UI never
 * mutates a plan client-side.
 */

import type { PlanDoc } from "./api.js";

/** Node ids in dependency order; ties broken by ascending id so the result
 * is deterministic for a given plan. */
export function topoOrder(plan: PlanDoc): number[] {
  const indegree = new Map<number, number>();
  const successors = new Map<number, number[]>();
  for (const node of plan.nodes) {
    indegree.set(node.id, 0);
    successors.set(node.id, []);
  }
  for (const edge of plan.edges) {
    indegree.set(edge.dest_node, (indegree.get(edge.dest_node) ?? 0) + 1);
    successors.get(edge.src_node)?.push(edge.dest_node);
  }
  const ready = [...indegree.entries()]
    .filter(([, d]) => d === 0)
    .map(([id]) => id)
    .sort((a, b) => a - b);
  const order: number[] = [];
  while (ready.length > 0) {
    const id = ready.shift()!;
    order.push(id);
    for (const next of successors.get(id) ?? []) {
      const d = indegree.get(next)! - 1;
      indegree.set(next, d);
      if (d === 0) {
        // Insertion sort keeps the ready queue id-ordered.
        let at = ready.length;
        while (at > 0 && ready[at - 1]! > next) {
          at -= 1;
        }
        ready.splice(at, 0, next);
      }
    }
  }
  return order;
}

/**
 * True when collapsing the selection to one node keeps the plan acyclic,
 * i.e. no path leaves the selection and re-enters it. Edges fully inside
 * the selection disappear into the contracted node and are ignored.
 */
export function isContractible(plan: PlanDoc, selection: Set<number>): boolean {
  const known = new Set(plan.nodes.map((n) => n.id));
  for (const id of selection) {
    if (!known.has(id)) {
      throw new Error(`selection references unknown node id ${id}`);
    }
  }
  // The contracted node is keyed as 0; real ids are positive.
  const SENTINEL = 0;
  const key = (id: number): number => (selection.has(id) ? SENTINEL : id);
  const successors = new Map<number, Set<number>>();
  for (const edge of plan.edges) {
    const a = key(edge.src_node);
    const b = key(edge.dest_node);
    if (a === SENTINEL && b === SENTINEL) {
      continue;
    }
    if (!successors.has(a)) {
      successors.set(a, new Set());
    }
    successors.get(a)!.add(b);
  }
  const WHITE = 0;
  const GRAY = 1;
  const BLACK = 2;
  const color = new Map<number, number>();
  for (const start of successors.keys()) {
    if ((color.get(start) ?? WHITE) !== WHITE) {
      continue;
    }
    const stack: { node: number; next: number[] }[] = [
      { node: start, next: [...(successors.get(start) ?? [])] },
    ];
    color.set(start, GRAY);
    while (stack.length > 0) {
      const frame = stack[stack.length - 1]!;
      const candidate = frame.next.shift();
      if (candidate === undefined) {
        color.set(frame.node, BLACK);
        stack.pop();
        continue;
      }
      const c = color.get(candidate) ?? WHITE;
      if (c === GRAY) {
        return false;
      }
      if (c === WHITE) {
        color.set(candidate, GRAY);
        stack.push({ node: candidate, next: [...(successors.get(candidate) ?? [])] });
      }
    }
  }
  return true;
}

/** Why a selection cannot be merged; null when it can. */
export function mergeBlocker(
  plan: PlanDoc,
  selection: Set<number>,
): string | null {
  if (selection.size < 2) {
    return "select at least two nodes to merge";
  }
  if (!isContractible(plan, selection)) {
    return "selection is not contractible: a path leaves the selection and re-enters it, so merging would create a cycle";
  }
  return null;
}

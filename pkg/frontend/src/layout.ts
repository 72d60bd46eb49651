/**
 * Deterministic layered left-to-right layout for plan graphs.
 *
 * A node's column is the length of its longest dependency chain; rows within
 * a column follow ascending id. Positions are presentation state only: the
 * plan schema carries no coordinates, and manual drags are kept client-side
 * as per-node overrides on top of this baseline.
 */

import type { PlanDoc } from "./api.js";
import { topoOrder } from "./graph.js";

export interface Point {
  x: number;
  y: number;
}

export const NODE_WIDTH = 230;
export const NODE_HEIGHT = 120;
export const COLUMN_GAP = 70;
export const ROW_GAP = 30;
export const CANVAS_PADDING = 24;

export function layoutPlan(
  plan: PlanDoc,
  overrides?: Map<number, Point>,
): Map<number, Point> {
  const order = topoOrder(plan);
  const predecessors = new Map<number, number[]>();
  for (const edge of plan.edges) {
    if (!predecessors.has(edge.dest_node)) {
      predecessors.set(edge.dest_node, []);
    }
    predecessors.get(edge.dest_node)!.push(edge.src_node);
  }
  const column = new Map<number, number>();
  for (const id of order) {
    let depth = 0;
    for (const pred of predecessors.get(id) ?? []) {
      depth = Math.max(depth, (column.get(pred) ?? 0) + 1);
    }
    column.set(id, depth);
  }
  const rows = new Map<number, number[]>();
  for (const id of [...column.keys()].sort((a, b) => a - b)) {
    const col = column.get(id)!;
    if (!rows.has(col)) {
      rows.set(col, []);
    }
    rows.get(col)!.push(id);
  }
  const positions = new Map<number, Point>();
  for (const [col, ids] of rows) {
    ids.forEach((id, row) => {
      positions.set(id, {
        x: CANVAS_PADDING + col * (NODE_WIDTH + COLUMN_GAP),
        y: CANVAS_PADDING + row * (NODE_HEIGHT + ROW_GAP),
      });
    });
  }
  if (overrides) {
    for (const [id, point] of overrides) {
      if (positions.has(id)) {
        positions.set(id, point);
      }
    }
  }
  return positions;
}

/** Bounding box of a layout, for sizing the canvas element. */
export function layoutExtent(positions: Map<number, Point>): Point {
  let x = 0;
  let y = 0;
  for (const point of positions.values()) {
    x = Math.max(x, point.x + NODE_WIDTH + CANVAS_PADDING);
    y = Math.max(y, point.y + NODE_HEIGHT + CANVAS_PADDING);
  }
  return { x, y };
}

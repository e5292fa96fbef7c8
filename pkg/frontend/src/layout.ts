import type { GraphView } from "./types.js";

export interface PlacedNode {
  id: string;
  layer: number;
  /* center coordinates */
  x: number;
  y: number;
}

export interface Layout {
  nodes: Map<string, PlacedNode>;
  width: number;
  height: number;
  nodeWidth: number;
  nodeHeight: number;
}

const COLUMN = 170;
const ROW = 110;
const NODE_W = 140;
const NODE_H = 54;
const MARGIN = 40;

/**
 * Layered top-down placement: a node's layer is its breadth-first depth
 * from the root, so back edges of loops point upward and branches fan
 * out side by side. Purely a function of the view data, so the same
 * graph always lands in the same spots.
 */
export function layeredLayout(view: GraphView): Layout {
  const outgoing = new Map<string, string[]>();
  for (const node of view.nodes) outgoing.set(node.id, []);
  for (const edge of view.edges) outgoing.get(edge.src)?.push(edge.dst);

  const layerOf = new Map<string, number>();
  const layers: string[][] = [];
  let frontier = [view.root];
  layerOf.set(view.root, 0);
  while (frontier.length > 0) {
    layers.push(frontier);
    const next: string[] = [];
    for (const id of frontier) {
      for (const dst of outgoing.get(id) ?? []) {
        if (!layerOf.has(dst)) {
          layerOf.set(dst, layers.length);
          next.push(dst);
        }
      }
    }
    frontier = next;
  }
  // nodes unreachable from the root still get a spot at the bottom
  const leftovers = view.nodes.filter((n) => !layerOf.has(n.id)).map((n) => n.id);
  if (leftovers.length > 0) {
    for (const id of leftovers) layerOf.set(id, layers.length);
    layers.push(leftovers);
  }

  const widest = Math.max(...layers.map((row) => row.length));
  const width = widest * COLUMN + 2 * MARGIN;
  const nodes = new Map<string, PlacedNode>();
  layers.forEach((row, layer) => {
    const rowWidth = row.length * COLUMN;
    row.forEach((id, i) => {
      nodes.set(id, {
        id,
        layer,
        x: (width - rowWidth) / 2 + (i + 0.5) * COLUMN,
        y: MARGIN + NODE_H / 2 + layer * ROW,
      });
    });
  });

  return {
    nodes,
    width,
    height: layers.length * ROW + 2 * MARGIN,
    nodeWidth: NODE_W,
    nodeHeight: NODE_H,
  };
}

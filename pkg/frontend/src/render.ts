import { layeredLayout } from "./layout.js";
import type { GraphView } from "./types.js";

export interface GraphState {
  /** Node id reported by the service for the latest turn, if any. */
  current: string | null;
  /** Service-reported breadcrumb; consecutive pairs mark traversed edges. */
  path: string[];
}

const SVG_NS = "http://www.w3.org/2000/svg";
const LABEL_LIMIT = 20;

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) el.setAttribute(key, value);
  return el;
}

function shorten(text: string): string {
  return text.length > LABEL_LIMIT ? `${text.slice(0, LABEL_LIMIT - 1)}…` : text;
}

/**
 * Redraw the flowchart from scratch: every node and edge of the view
 * exactly once, the service-reported current node highlighted, edges
 * along the reported path emphasized. A full redraw per turn keeps the
 * picture in lockstep with the latest response.
 */
export function renderGraph(container: HTMLElement, view: GraphView, state: GraphState): void {
  const layout = layeredLayout(view);
  const traversed = new Set<string>();
  for (let i = 0; i + 1 < state.path.length; i++) {
    traversed.add(`${state.path[i]}->${state.path[i + 1]}`);
  }

  const svg = svgEl("svg", {
    viewBox: `0 0 ${layout.width} ${layout.height}`,
    width: String(layout.width),
    role: "img",
  });
  svg.classList.add("flowchart");

  const marker = svgEl("marker", {
    id: "arrow",
    viewBox: "0 0 10 10",
    refX: "9",
    refY: "5",
    markerWidth: "7",
    markerHeight: "7",
    orient: "auto-start-reverse",
  });
  marker.appendChild(svgEl("path", { d: "M 0 0 L 10 5 L 0 10 z" }));
  const defs = svgEl("defs", {});
  defs.appendChild(marker);
  svg.appendChild(defs);

  const halfH = layout.nodeHeight / 2;
  for (const edge of view.edges) {
    const from = layout.nodes.get(edge.src);
    const to = layout.nodes.get(edge.dst);
    if (!from || !to) continue;
    const key = `${edge.src}->${edge.dst}`;
    const group = svgEl("g", { "data-edge": key });
    group.classList.add("edge");
    if (traversed.has(key)) group.classList.add("traversed");

    let d: string;
    let labelX: number;
    let labelY: number;
    if (to.layer > from.layer) {
      d = `M ${from.x} ${from.y + halfH} L ${to.x} ${to.y - halfH}`;
      labelX = (from.x + to.x) / 2 + 8;
      labelY = (from.y + halfH + (to.y - halfH)) / 2 - 4;
    } else {
      // upward or sideways edge (loop): bow out to the right
      const bend = Math.max(from.x, to.x) + layout.nodeWidth * 0.75;
      d = `M ${from.x} ${from.y + halfH} C ${bend} ${from.y + halfH}, ${bend} ${to.y - halfH}, ${to.x} ${to.y - halfH}`;
      labelX = bend - 10;
      labelY = (from.y + to.y) / 2;
    }
    group.appendChild(svgEl("path", { d, fill: "none", "marker-end": "url(#arrow)" }));
    const label = svgEl("text", { x: String(labelX), y: String(labelY) });
    label.classList.add("edge-label");
    label.textContent = edge.cond;
    group.appendChild(label);
    svg.appendChild(group);
  }

  for (const node of view.nodes) {
    const spot = layout.nodes.get(node.id);
    if (!spot) continue;
    const group = svgEl("g", { "data-node-id": node.id });
    group.classList.add("node", node.kind);
    if (node.id === state.current) group.classList.add("current");

    const w = layout.nodeWidth;
    const h = layout.nodeHeight;
    let shape: SVGElement;
    if (node.kind === "decision") {
      const points = [
        `${spot.x},${spot.y - h / 2}`,
        `${spot.x + w / 2},${spot.y}`,
        `${spot.x},${spot.y + h / 2}`,
        `${spot.x - w / 2},${spot.y}`,
      ].join(" ");
      shape = svgEl("polygon", { points });
    } else {
      shape = svgEl("rect", {
        x: String(spot.x - w / 2),
        y: String(spot.y - h / 2),
        width: String(w),
        height: String(h),
        rx: node.kind === "terminal" ? String(h / 2) : "4",
      });
    }
    group.appendChild(shape);

    const label = svgEl("text", {
      x: String(spot.x),
      y: String(spot.y + 4),
      "text-anchor": "middle",
    });
    label.textContent = shorten(node.text);
    group.appendChild(label);
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = node.text;
    group.appendChild(title);
    svg.appendChild(group);
  }

  container.replaceChildren(svg);
}

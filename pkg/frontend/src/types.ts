/** Wire types, shaped exactly like the service responses. */

export type NodeKind = "decision" | "operation" | "terminal";

export interface FlowchartSummary {
  id: string;
  root: string;
  nodes: number;
}

export interface GraphNode {
  id: string;
  text: string;
  kind: NodeKind;
}

export interface GraphEdge {
  src: string;
  dst: string;
  cond: string;
}

export interface GraphView {
  id: string;
  root: string;
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface CreateSessionResponse {
  session_id: string;
  reply: string;
  node: string;
  outcome: string;
  phase: string;
  hops: number;
}

export interface MessageResponse {
  reply: string;
  node: string;
  outcome: string;
  phase: string;
  path: string[];
}

export interface ThreadEntry {
  speaker: "user" | "agent";
  text: string;
}

export interface SessionView {
  session_id: string;
  flowchart_id: string;
  node: string;
  phase: string;
  path: string[];
  turn: number;
  thread: ThreadEntry[];
}

import type { GraphView } from "../src/types.js";

/** Small car-troubleshooting chart used by most tests. */
export const CAR_GRAPH: GraphView = {
  id: "car",
  root: "n_open",
  nodes: [
    { id: "n_open", text: "open circuit on run?", kind: "decision" },
    { id: "n_fuse", text: "fuse wire blown?", kind: "decision" },
    { id: "n_battery", text: "clean the battery terminals", kind: "operation" },
    { id: "n_replace", text: "replace the fuse wire", kind: "operation" },
    { id: "n_wiring", text: "inspect the wiring loom", kind: "operation" },
    { id: "t_fixed", text: "circuit restored", kind: "terminal" },
    { id: "t_wiring", text: "book a wiring repair", kind: "terminal" },
    { id: "t_battery", text: "battery serviced", kind: "terminal" },
  ],
  edges: [
    { src: "n_open", dst: "n_fuse", cond: "yes" },
    { src: "n_open", dst: "n_battery", cond: "no" },
    { src: "n_fuse", dst: "n_replace", cond: "yes" },
    { src: "n_fuse", dst: "n_wiring", cond: "no" },
    { src: "n_replace", dst: "t_fixed", cond: "done" },
    { src: "n_wiring", dst: "t_wiring", cond: "done" },
    { src: "n_battery", dst: "t_battery", cond: "done" },
  ],
};

interface MockSession {
  id: string;
  chartId: string;
  node: string;
  path: string[];
  phase: string;
  turn: number;
  thread: { speaker: "user" | "agent"; text: string }[];
}

interface InjectedFailure {
  status: number;
  detail: string;
}

const normalize = (text: string): string => text.toLowerCase().trim().replace(/\s+/g, " ");

/**
 * In-memory stand-in for the dialogue service, speaking the same wire
 * shapes and status codes. A condition word moves the session along an
 * edge, a known question is answered in place, anything else repeats
 * the current node's prompt.
 */
export class MockService {
  readonly sessions = new Map<string, MockSession>();
  /** "METHOD /path" log, for asserting request construction. */
  readonly requests: string[] = [];
  /** Parsed JSON bodies of POST requests, in order. */
  readonly bodies: unknown[] = [];

  private readonly graphs: Map<string, GraphView>;
  private readonly faq: Map<string, string>;
  private readonly failures: (InjectedFailure | "network")[] = [];
  private counter = 0;

  constructor(graphs: GraphView[] = [CAR_GRAPH], faq: Record<string, string> = {}) {
    this.graphs = new Map(graphs.map((g) => [g.id, g]));
    this.faq = new Map(Object.entries(faq).map(([k, v]) => [normalize(k), v]));
  }

  /** Queue a failure for the next request only. */
  failNext(status: number, detail = "injected failure"): void {
    this.failures.push({ status, detail });
  }

  /** Queue a network-level failure (fetch rejects) for the next request. */
  failNextNetwork(): void {
    this.failures.push("network");
  }

  readonly fetch: typeof fetch = (input, init) => this.handle(input, init);

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private error(status: number, detail: string): Response {
    return this.json({ detail }, status);
  }

  private outEdges(chartId: string, node: string) {
    const graph = this.graphs.get(chartId);
    return graph ? graph.edges.filter((e) => e.src === node) : [];
  }

  private async handle(input: RequestInfo | URL, init?: RequestInit): Promise<Response> {
    const url = new URL(String(input), "http://mock.invalid");
    const method = (init?.method ?? "GET").toUpperCase();
    this.requests.push(`${method} ${url.pathname}`);

    const injected = this.failures.shift();
    if (injected === "network") throw new TypeError("fetch failed");
    if (injected) return this.error(injected.status, injected.detail);

    let body: Record<string, unknown> = {};
    if (typeof init?.body === "string") {
      body = JSON.parse(init.body) as Record<string, unknown>;
      this.bodies.push(body);
    }

    const parts = url.pathname.split("/").filter(Boolean).map(decodeURIComponent);

    if (method === "GET" && url.pathname === "/flowcharts") {
      return this.json({
        flowcharts: [...this.graphs.values()].map((g) => ({
          id: g.id,
          root: g.root,
          nodes: g.nodes.length,
        })),
      });
    }

    if (method === "GET" && parts.length === 3 && parts[0] === "flowcharts" && parts[2] === "graph") {
      const graph = this.graphs.get(parts[1] ?? "");
      if (!graph) return this.error(404, `unknown flowchart ${parts[1]}`);
      return this.json(graph);
    }

    if (method === "POST" && url.pathname === "/sessions") {
      const chartId = String(body.flowchart_id ?? "");
      const message = String(body.message ?? "");
      const graph = this.graphs.get(chartId);
      if (!graph) return this.error(404, `unknown flowchart ${chartId}`);
      if (message.trim() === "") return this.error(422, "message must not be blank");
      const id = `mock-session-${++this.counter}`;
      const root = graph.root;
      const rootText = graph.nodes.find((n) => n.id === root)?.text ?? "";
      const session: MockSession = {
        id,
        chartId,
        node: root,
        path: [root],
        phase: "active",
        turn: 1,
        thread: [
          { speaker: "user", text: message },
          { speaker: "agent", text: rootText },
        ],
      };
      this.sessions.set(id, session);
      return this.json(
        {
          session_id: id,
          reply: rootText,
          node: root,
          outcome: "stayed",
          phase: "active",
          hops: 0,
        },
        201,
      );
    }

    if (parts.length >= 2 && parts[0] === "sessions") {
      const session = this.sessions.get(parts[1] ?? "");
      if (!session) return this.error(404, `unknown session ${parts[1]}`);

      if (method === "POST" && parts[2] === "messages") {
        if (session.phase !== "active") {
          return this.error(409, `session is ${session.phase}`);
        }
        const message = String(body.message ?? "");
        if (message.trim() === "") return this.error(422, "message must not be blank");
        const result = this.takeTurn(session, message);
        return this.json(result);
      }

      if (method === "GET" && parts.length === 2) {
        return this.json({
          session_id: session.id,
          flowchart_id: session.chartId,
          node: session.node,
          phase: session.phase,
          path: [...session.path],
          turn: session.turn,
          thread: session.thread.map((line) => ({ ...line })),
        });
      }
    }

    return this.error(404, `no route for ${method} ${url.pathname}`);
  }

  private takeTurn(session: MockSession, message: string) {
    const graph = this.graphs.get(session.chartId);
    const text = (id: string) => graph?.nodes.find((n) => n.id === id)?.text ?? "";
    const wanted = normalize(message);
    const edge = this.outEdges(session.chartId, session.node).find(
      (e) => normalize(e.cond) === wanted,
    );

    let outcome: string;
    let reply: string;
    if (edge) {
      session.node = edge.dst;
      session.path.push(edge.dst);
      const terminal = this.outEdges(session.chartId, edge.dst).length === 0;
      outcome = terminal ? "reached_terminal" : "transitioned";
      if (terminal) session.phase = "terminal";
      reply = text(edge.dst);
    } else {
      const answer = this.faq.get(wanted);
      if (answer !== undefined) {
        outcome = "faq_answered";
        reply = answer;
      } else {
        outcome = "stayed";
        reply = text(session.node);
      }
    }

    session.turn += 1;
    session.thread.push({ speaker: "user", text: message }, { speaker: "agent", text: reply });
    return {
      reply,
      node: session.node,
      outcome,
      phase: session.phase,
      path: [...session.path],
    };
  }
}

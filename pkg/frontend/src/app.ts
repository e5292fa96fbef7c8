import { ApiClient, ServiceError } from "./api.js";
import { renderGraph } from "./render.js";
import type { FlowchartSummary, GraphView } from "./types.js";

export interface AppOptions {
  baseUrl?: string;
  fetchImpl?: typeof fetch;
}

interface ThreadLine {
  speaker: "user" | "agent";
  text: string;
  turn: number;
}

interface Banner {
  message: string;
  retryable: boolean;
}

/**
 * The whole client state. Node, path, and phase are copied verbatim from
 * the latest service response; the client never advances them on its own.
 */
interface AppState {
  charts: FlowchartSummary[];
  chartId: string | null;
  view: GraphView | null;
  sessionId: string | null;
  phase: string;
  current: string | null;
  path: string[];
  thread: ThreadLine[];
  turn: number;
  inFlight: boolean;
  banner: Banner | null;
  bootFailed: boolean;
  pendingMessage: string | null;
  summary: string | null;
}

export interface App {
  /** Resolves once the chart list and first graph are loaded (or failed). */
  ready: Promise<void>;
  /** Resolves when no request is in flight; lets tests await a turn. */
  settle(): Promise<void>;
}

export function createApp(root: HTMLElement, options: AppOptions = {}): App {
  const api = new ApiClient(options.baseUrl ?? "", options.fetchImpl);
  const state: AppState = {
    charts: [],
    chartId: null,
    view: null,
    sessionId: null,
    phase: "idle",
    current: null,
    path: [],
    thread: [],
    turn: 0,
    inFlight: false,
    banner: null,
    bootFailed: false,
    pendingMessage: null,
    summary: null,
  };

  root.innerHTML = `
    <div class="app">
      <header>
        <h1>flowdialog</h1>
        <label>chart
          <select data-testid="chart-select"></select>
        </label>
        <span class="badge" data-testid="phase-badge"></span>
      </header>
      <main>
        <section class="graph-pane" data-testid="graph"></section>
        <section class="chat-pane">
          <div class="banner" data-testid="banner" hidden>
            <span data-testid="banner-message"></span>
            <button type="button" data-testid="retry" hidden>retry</button>
          </div>
          <ol class="thread" data-testid="thread"></ol>
          <div class="summary" data-testid="summary" hidden></div>
          <form data-testid="composer">
            <input data-testid="input" autocomplete="off"
                   placeholder="describe the problem, answer, or ask a question" />
            <button type="button" data-testid="send">send</button>
          </form>
          <div class="breadcrumb" data-testid="breadcrumb"></div>
        </section>
      </main>
    </div>`;

  const q = <T extends HTMLElement>(id: string): T => {
    const el = root.querySelector<T>(`[data-testid="${id}"]`);
    if (!el) throw new Error(`missing element ${id}`);
    return el;
  };
  const select = q<HTMLSelectElement>("chart-select");
  const badge = q<HTMLElement>("phase-badge");
  const graphPane = q<HTMLElement>("graph");
  const bannerBox = q<HTMLElement>("banner");
  const bannerMessage = q<HTMLElement>("banner-message");
  const retryButton = q<HTMLButtonElement>("retry");
  const threadList = q<HTMLOListElement>("thread");
  const summaryBox = q<HTMLElement>("summary");
  const input = q<HTMLInputElement>("input");
  const sendButton = q<HTMLButtonElement>("send");
  const breadcrumb = q<HTMLElement>("breadcrumb");

  const locked = () => state.phase !== "idle" && state.phase !== "active";

  function paint(): void {
    badge.textContent = state.phase === "idle" ? "no session" : state.phase;
    badge.className = `badge badge-${state.phase}`;

    threadList.replaceChildren(
      ...state.thread.map((line) => {
        const item = document.createElement("li");
        item.className = line.speaker;
        item.dataset.turn = String(line.turn);
        item.textContent = `${line.speaker}: ${line.text}`;
        return item;
      }),
    );

    breadcrumb.textContent = state.path.join(" -> ");

    if (state.banner) {
      bannerBox.hidden = false;
      bannerMessage.textContent = state.banner.message;
      retryButton.hidden = !state.banner.retryable;
    } else {
      bannerBox.hidden = true;
    }

    if (state.summary) {
      summaryBox.hidden = false;
      summaryBox.textContent = state.summary;
    } else {
      summaryBox.hidden = true;
    }

    const frozen = state.inFlight || locked() || state.bootFailed || !state.view;
    input.disabled = frozen;
    sendButton.disabled = frozen;
    select.disabled = state.inFlight;

    if (state.view) {
      renderGraph(graphPane, state.view, { current: state.current, path: state.path });
    } else {
      graphPane.replaceChildren();
    }
  }

  let op: Promise<void> = Promise.resolve();

  function track(work: () => Promise<void>): Promise<void> {
    const run = work().catch((err: unknown) => {
      // unexpected programming errors surface in the banner too
      if (!(err instanceof ServiceError)) {
        state.banner = { message: err instanceof Error ? err.message : String(err), retryable: false };
        paint();
      }
    });
    op = op.then(() => run);
    return run;
  }

  async function boot(): Promise<void> {
    state.bootFailed = false;
    state.banner = null;
    try {
      state.charts = await api.listFlowcharts();
      select.replaceChildren(
        ...state.charts.map((chart) => {
          const option = document.createElement("option");
          option.value = chart.id;
          option.textContent = `${chart.id} (${chart.nodes} nodes)`;
          return option;
        }),
      );
      const first = state.charts[0];
      if (!first) throw new ServiceError(0, "service lists no flowcharts");
      await loadChart(first.id);
    } catch (err) {
      state.bootFailed = true;
      state.banner = {
        message: err instanceof ServiceError ? err.message : String(err),
        retryable: true,
      };
      state.pendingMessage = null;
      paint();
    }
  }

  async function loadChart(chartId: string): Promise<void> {
    state.chartId = chartId;
    select.value = chartId;
    state.view = await api.getGraph(chartId);
    state.sessionId = null;
    state.phase = "idle";
    state.current = null;
    state.path = [];
    state.thread = [];
    state.turn = 0;
    state.summary = null;
    state.banner = null;
    paint();
  }

  async function sendTurn(text: string): Promise<void> {
    if (state.inFlight || locked() || !state.chartId) return;
    state.inFlight = true;
    state.banner = null;
    state.pendingMessage = text;
    paint();
    try {
      if (state.sessionId === null) {
        const created = await api.createSession(state.chartId, text);
        state.sessionId = created.session_id;
        // the view call returns the authoritative breadcrumb and thread
        const view = await api.getSession(created.session_id);
        state.phase = view.phase;
        state.current = view.node;
        state.path = view.path;
        state.turn = view.turn;
        state.thread = view.thread.map((line, i) => ({
          speaker: line.speaker,
          text: line.text,
          turn: Math.floor(i / 2) + 1,
        }));
      } else {
        const reply = await api.sendMessage(state.sessionId, text);
        state.turn += 1;
        state.thread = [
          ...state.thread,
          { speaker: "user", text, turn: state.turn },
          { speaker: "agent", text: reply.reply, turn: state.turn },
        ];
        state.phase = reply.phase;
        state.current = reply.node;
        state.path = reply.path;
      }
      state.pendingMessage = null;
      input.value = "";
      if (locked()) {
        state.summary = `session ${state.phase}; path ${state.path.join(" -> ")}`;
      }
    } catch (err) {
      if (err instanceof ServiceError) {
        state.banner = { message: err.message, retryable: err.retryable };
        if (!err.retryable) state.pendingMessage = null;
      } else {
        throw err;
      }
    } finally {
      state.inFlight = false;
      paint();
    }
  }

  function submitFromInput(): void {
    const text = input.value.trim();
    if (!text) return;
    void track(() => sendTurn(text));
  }

  sendButton.addEventListener("click", submitFromInput);
  q<HTMLFormElement>("composer").addEventListener("submit", (event) => {
    event.preventDefault();
    submitFromInput();
  });
  retryButton.addEventListener("click", () => {
    const text = state.pendingMessage;
    void track(async () => {
      if (state.bootFailed) {
        await boot();
      } else if (text !== null) {
        await sendTurn(text);
      }
    });
  });
  select.addEventListener("change", () => {
    void track(() => loadChart(select.value));
  });

  paint();
  const ready = track(boot);

  return {
    ready,
    async settle() {
      let previous;
      do {
        previous = op;
        await previous;
      } while (op !== previous);
    },
  };
}

import type {
  CreateSessionResponse,
  FlowchartSummary,
  GraphView,
  MessageResponse,
  SessionView,
} from "./types.js";

/** Service-reported failure; status 0 means the service was unreachable. */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(status === 0 ? `service unreachable: ${detail}` : `${status}: ${detail}`);
    this.name = "ServiceError";
  }

  /** Worth re-sending the same request (outage or throttling, not a client mistake). */
  get retryable(): boolean {
    return this.status === 0 || this.status >= 500;
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = globalThis.fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ServiceError(0, err instanceof Error ? err.message : String(err));
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async listFlowcharts(): Promise<FlowchartSummary[]> {
    const body = await this.request<{ flowcharts: FlowchartSummary[] }>("/flowcharts");
    return body.flowcharts;
  }

  getGraph(flowchartId: string): Promise<GraphView> {
    return this.request<GraphView>(`/flowcharts/${encodeURIComponent(flowchartId)}/graph`);
  }

  createSession(flowchartId: string, message: string): Promise<CreateSessionResponse> {
    return this.post<CreateSessionResponse>("/sessions", {
      flowchart_id: flowchartId,
      message,
    });
  }

  sendMessage(sessionId: string, message: string): Promise<MessageResponse> {
    return this.post<MessageResponse>(
      `/sessions/${encodeURIComponent(sessionId)}/messages`,
      { message },
    );
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>(`/sessions/${encodeURIComponent(sessionId)}`);
  }
}

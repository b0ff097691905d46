// Typed fetch client for the trial service. One method per endpoint, no
// response reshaping: what the service returns is what the caller gets.

import type {
  CreatedSession,
  Dc,
  DesignForm,
  Health,
  HeatmapsPayload,
  OutcomeResponse,
  SessionState,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: unknown) {
    super(`HTTP ${status}: ${typeof detail === "string" ? detail : JSON.stringify(detail)}`);
    this.name = "ApiError";
  }
}

export class TrialServiceClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    const body: unknown = await resp.json();
    if (!resp.ok) {
      const detail = (body as { detail?: unknown } | null)?.detail ?? body;
      throw new ApiError(resp.status, detail);
    }
    return body as T;
  }

  createSession(design: Partial<DesignForm>): Promise<CreatedSession> {
    return this.request("/sessions", { method: "POST", body: JSON.stringify(design) });
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${sessionId}`);
  }

  postOutcome(sessionId: string, outcome: 0 | 1, dc?: Dc): Promise<OutcomeResponse> {
    const body = dc ? { outcome, dc } : { outcome };
    return this.request(`/sessions/${sessionId}/outcomes`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  getHeatmaps(sessionId: string): Promise<HeatmapsPayload> {
    return this.request(`/sessions/${sessionId}/heatmaps`);
  }

  health(): Promise<Health> {
    return this.request("/healthz");
  }
}

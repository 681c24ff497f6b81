/** Typed client for the elicitation service. No retries here: the
 * controller decides what a 409 or network failure means for the view. */

import type { SessionConfigInput, SessionSummary, StateDoc, TrialDoc } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let code = "unknown";
  let message = `HTTP ${resp.status}`;
  try {
    const body = (await resp.json()) as { error?: string; message?: string };
    if (body.error) code = body.error;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, code, message);
}

export class PrefApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  createSession(config: SessionConfigInput): Promise<StateDoc> {
    return this.request<StateDoc>("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config),
    });
  }

  listSessions(): Promise<SessionSummary[]> {
    return this.request<SessionSummary[]>("/sessions");
  }

  getState(id: string): Promise<StateDoc> {
    return this.request<StateDoc>(`/sessions/${id}`);
  }

  getTrial(id: string): Promise<TrialDoc> {
    return this.request<TrialDoc>(`/sessions/${id}/trial`);
  }

  /** Submit a choice; `step` must echo the trial index shown at click time. */
  postResponse(id: string, step: number, r: 0 | 1): Promise<StateDoc> {
    return this.request<StateDoc>(`/sessions/${id}/response`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ step, r }),
    });
  }
}

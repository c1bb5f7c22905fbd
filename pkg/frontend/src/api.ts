// The only module that talks to the network. Everything the UI displays
// arrives through one of these calls.

import { PreviewDoc, RunStatusDoc, SpecDoc, StatsDoc } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, public body: unknown) {
    super(`API error ${status}`);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (u, i) => fetch(u, i),
    private token?: string,
  ) {}

  private headers(extra?: Record<string, string>): Record<string, string> {
    const h: Record<string, string> = { "content-type": "application/json", ...extra };
    if (this.token) h["authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async json<T>(url: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + url, init);
    const body = await resp.json();
    if (!resp.ok) throw new ApiError(resp.status, body);
    return body as T;
  }

  createExperiment(spec: SpecDoc, idempotencyKey?: string): Promise<RunStatusDoc> {
    const extra = idempotencyKey ? { "idempotency-key": idempotencyKey } : undefined;
    return this.json("/v1/experiments", {
      method: "POST",
      headers: this.headers(extra),
      body: JSON.stringify(spec),
    });
  }

  startRun(runId: string): Promise<RunStatusDoc> {
    return this.json(`/v1/experiments/${runId}/run`, { method: "POST", headers: this.headers() });
  }

  getRun(runId: string): Promise<RunStatusDoc> {
    return this.json(`/v1/runs/${runId}`, { headers: this.headers() });
  }

  preview(runId: string): Promise<PreviewDoc> {
    return this.json(`/v1/runs/${runId}/preview`, { headers: this.headers() });
  }

  compare(a: string, b: string, ue = 0): Promise<StatsDoc> {
    return this.json(`/v1/compare?a=${a}&b=${b}&ue=${ue}`, {
      method: "POST",
      headers: this.headers(),
    });
  }

  stats(runId: string): Promise<StatsDoc> {
    return this.json(`/v1/runs/${runId}/artifacts/stats`, { headers: this.headers() });
  }

  async waterfallCsv(runId: string, ue = 0): Promise<string> {
    const resp = await this.fetchImpl(
      `${this.baseUrl}/v1/runs/${runId}/artifacts/waterfall?ue=${ue}`,
      { headers: this.headers() },
    );
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return resp.text();
  }

  async iqBytes(runId: string, ue = 0): Promise<ArrayBuffer> {
    const resp = await this.fetchImpl(`${this.baseUrl}/v1/runs/${runId}/artifacts/iq?ue=${ue}`, {
      headers: this.headers(),
    });
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return resp.arrayBuffer();
  }
}

/** Typed client for the /api/v1 service with latest-wins cancellation.
 *
 * Each endpoint group keeps one in-flight request; issuing a new one
 * aborts the previous, so rapid navigation can never render a stale
 * response over a newer one.
 */

import type {
  ConceptsResponse, FrameResponse, LogsResponse, PerturbResponse,
  QueryResponse, TimesResponse,
} from "./types.js";

export const API_PREFIX = "/api/v1";

/** The complete documented endpoint set; the contract test checks that
 * no request leaves this list. */
export const ENDPOINTS = [
  "GET /api/v1/frames",
  "GET /api/v1/times",
  "POST /api/v1/query",
  "POST /api/v1/perturb",
  "GET /api/v1/logs",
  "GET /api/v1/importance",
  "GET /api/v1/concepts",
] as const;

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

/** Thrown internally when a newer request superseded this one. */
export class Superseded extends Error {}

type FetchLike = typeof fetch;

export class ApiClient {
  private controllers = new Map<string, AbortController>();

  constructor(
    private fetchImpl: FetchLike = fetch,
    private base: string = "",
  ) {}

  private async request<T>(group: string, method: string, path: string,
                           body?: unknown): Promise<T> {
    this.controllers.get(group)?.abort();
    const controller = new AbortController();
    this.controllers.set(group, controller);
    let res: Response;
    try {
      res = await this.fetchImpl(this.base + path, {
        method,
        signal: controller.signal,
        headers: body === undefined ? undefined
          : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      if ((err as Error).name === "AbortError") throw new Superseded();
      throw err;
    }
    if (this.controllers.get(group) !== controller) throw new Superseded();
    if (!res.ok) {
      let detail = res.statusText;
      try {
        detail = ((await res.json()) as { detail?: string }).detail ?? detail;
      } catch { /* non-JSON error body */ }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  frames(time: string): Promise<FrameResponse> {
    return this.request("frames", "GET",
      `${API_PREFIX}/frames?time=${encodeURIComponent(time)}`);
  }

  times(): Promise<TimesResponse> {
    return this.request("times", "GET", `${API_PREFIX}/times`);
  }

  query(body: { time: string; segment_id: number; k1?: number; k2?: number;
                min_gap_days?: number }): Promise<QueryResponse> {
    return this.request("query", "POST", `${API_PREFIX}/query`, body);
  }

  perturb(body: { time: string; segment_id: number; concept_id: number;
                  alpha: number | number[] }): Promise<PerturbResponse> {
    return this.request("perturb", "POST", `${API_PREFIX}/perturb`, body);
  }

  logs(limit = 50): Promise<LogsResponse> {
    return this.request("logs", "GET", `${API_PREFIX}/logs?limit=${limit}`);
  }

  concepts(): Promise<ConceptsResponse> {
    return this.request("concepts", "GET", `${API_PREFIX}/concepts`);
  }
}

/** Thin typed client over the trace service HTTP endpoints. */

import {
  asModel,
  asResponse,
  OrderMode,
  SwimlaneModel,
  SwimlaneResponse,
  TimeMode,
} from "./model.js";

export interface FailureEntry {
  seq: number;
  event_type: string;
  failure_reason: string;
  position: number;
}

export interface FailureReport {
  processes: { pid: number; failures: FailureEntry[] }[];
  totals: Record<string, number>;
  total: number;
}

export interface ProcessList {
  cursor: number;
  processes: { pid: number; crashed: boolean; records: number }[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

type FetchFn = typeof globalThis.fetch;

export class Client {
  private fetchFn: FetchFn;

  constructor(private base = "", fetchFn?: FetchFn) {
    // bind, a bare window.fetch reference throws "illegal invocation"
    this.fetchFn = fetchFn ?? globalThis.fetch.bind(globalThis);
  }

  private async getJson(path: string): Promise<unknown> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.base + path);
    } catch (err) {
      throw new ApiError(0, `network error: ${String(err)}`);
    }
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const doc = (await resp.json()) as { error?: string };
        if (doc && typeof doc.error === "string") detail = doc.error;
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return resp.json();
  }

  swimlane(opts: { mode?: OrderMode; time?: TimeMode; since?: number } = {}): Promise<SwimlaneResponse> {
    const q = new URLSearchParams();
    if (opts.mode) q.set("mode", opts.mode);
    if (opts.time) q.set("time", opts.time);
    if (opts.since !== undefined) q.set("since", String(opts.since));
    const qs = q.toString();
    return this.getJson(`/api/swimlane${qs ? "?" + qs : ""}`).then(asResponse);
  }

  isolate(seq: number, depth: number): Promise<SwimlaneModel> {
    return this.getJson(`/api/records/${seq}/isolate?depth=${depth}`).then((doc) => asModel(doc));
  }

  failures(): Promise<FailureReport> {
    return this.getJson("/api/failures") as Promise<FailureReport>;
  }

  processes(): Promise<ProcessList> {
    return this.getJson("/api/processes") as Promise<ProcessList>;
  }

  health(): Promise<{ status: string; records: number }> {
    return this.getJson("/healthz") as Promise<{ status: string; records: number }>;
  }
}

// Typed client for the control-plane API. Every non-2xx response carries
// {"error": {"kind", "message"}}; that surfaces as a thrown ApiError so
// callers can route it (param errors to fields, chain errors to cards).

import type {
  DatasetDoc,
  ManifestDoc,
  ParamsDoc,
  PipelineDoc,
  RunRecordDoc,
  RunRequestDoc,
  RunStatus,
  StoredPipelineDoc,
} from "./types.js";

export class ApiError extends Error {
  readonly kind: string;
  readonly status: number;

  constructor(status: number, kind: string, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.kind = kind;
  }
}

// Structural fetch type so the client runs on the browser fetch, happy-dom's,
// or an injected Node implementation without type gymnastics.
export interface FetchResponse {
  ok: boolean;
  status: number;
  statusText: string;
  json(): Promise<any>;
}

export type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}) => Promise<FetchResponse>;

async function parseError(response: FetchResponse): Promise<ApiError> {
  let kind = "HttpError";
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body && typeof body === "object" && body.error) {
      kind = String(body.error.kind ?? kind);
      message = String(body.error.message ?? message);
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(response.status, kind, message);
}

/** The surface the UI consumes; lets tests substitute a scripted client. */
export type ApiLike = Pick<ApiClient,
  "getPlugins" | "getDatasets" | "savePipeline" | "listPipelines"
  | "getPipeline" | "enqueueRun" | "getRun" | "getMetrics" | "listRuns"
  | "postSweep">;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(private readonly base: string = "", fetchFn?: FetchLike) {
    this.fetchFn = fetchFn
      ?? ((url, init) => fetch(url, init) as Promise<FetchResponse>);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(this.base + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return response.json() as Promise<T>;
  }

  async getPlugins(): Promise<ManifestDoc[]> {
    const doc = await this.request<{ plugins: ManifestDoc[] }>("GET", "/api/plugins");
    return doc.plugins;
  }

  async getDatasets(): Promise<DatasetDoc[]> {
    const doc = await this.request<{ datasets: DatasetDoc[] }>("GET", "/api/datasets");
    return doc.datasets;
  }

  /** Validate and store a pipeline; the fingerprint is the server's verdict. */
  async savePipeline(pipeline: PipelineDoc, params: ParamsDoc): Promise<string> {
    const doc = await this.request<{ fingerprint: string }>(
      "POST", "/api/pipelines", { pipeline, params });
    return doc.fingerprint;
  }

  async listPipelines(): Promise<StoredPipelineDoc[]> {
    const doc = await this.request<{ pipelines: StoredPipelineDoc[] }>(
      "GET", "/api/pipelines");
    return doc.pipelines;
  }

  async getPipeline(fingerprint: string): Promise<StoredPipelineDoc> {
    return this.request("GET", `/api/pipelines/${fingerprint}`);
  }

  async enqueueRun(request: RunRequestDoc): Promise<string> {
    const doc = await this.request<{ run_id: string }>("POST", "/api/runs", request);
    return doc.run_id;
  }

  async getRun(runId: string): Promise<RunRecordDoc> {
    return this.request("GET", `/api/runs/${runId}`);
  }

  async getMetrics(runId: string): Promise<Record<string, number>> {
    const doc = await this.request<{ metrics: Record<string, number> }>(
      "GET", `/api/runs/${runId}/metrics`);
    return doc.metrics;
  }

  async listRuns(filter: { status?: RunStatus; fingerprint?: string;
                           dataset?: string } = {}): Promise<RunRecordDoc[]> {
    const query = new URLSearchParams();
    if (filter.status) query.set("status", filter.status);
    if (filter.fingerprint) query.set("fingerprint", filter.fingerprint);
    if (filter.dataset) query.set("dataset", filter.dataset);
    const qs = query.toString();
    const doc = await this.request<{ runs: RunRecordDoc[] }>(
      "GET", qs ? `/api/runs?${qs}` : "/api/runs");
    return doc.runs;
  }

  async postSweep(template: RunRequestDoc,
                  grid: Record<string, unknown[]>): Promise<string[]> {
    const doc = await this.request<{ run_ids: string[] }>(
      "POST", "/api/sweeps", { template, grid });
    return doc.run_ids;
  }
}

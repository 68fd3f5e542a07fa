/** Thin client for the session service HTTP+JSON API. */

export const LABEL_PREFER_NEW = 1;
export const LABEL_PREFER_PREVIOUS = -1;
export const LABEL_CANT_TELL = 0;

export type Label = -1 | 0 | 1;

export interface BoundSpec {
  low: number;
  high: number;
  resolution: number;
}

export interface HistoryRow {
  iteration: number;
  config_native: number[];
  config_unit: number[];
  kind: string;
  timestamp: number;
  label: Label | null;
  note: string | null;
}

export interface SessionSummary {
  id: string;
  name: string;
  dim: number;
  phase: "init" | "interactive" | "finished";
  busy: boolean;
  n_init: number;
  total_iterations: number;
  recommendation_steps: number[];
  bounds: BoundSpec[];
  history: HistoryRow[];
  pending: Record<string, unknown> | null;
  gamma_hat: number | null;
  labels_received: number;
}

export interface SliceData {
  free_axes: number[];
  fixed: Record<string, number>;
  axis_values: number[][];
  mean: number[][];
  p_zero: number[][];
  maximizer_native: number[];
  maximizer_unit: number[];
  gamma_hat: number;
  p_zero_at_max: number;
}

export interface JobResult {
  config: number[];
  kind: string;
  diagnostics: Record<string, unknown>;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class SessionApi {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    const body = await res.json().catch(() => ({}));
    if (!res.ok) {
      throw new ApiError(res.status, (body as { message?: string }).message ?? res.statusText);
    }
    return body as T;
  }

  createSession(spec: Record<string, unknown>): Promise<{ id: string; initial_design: unknown[] }> {
    return this.request("/sessions", { method: "POST", body: JSON.stringify(spec) });
  }

  getSession(id: string): Promise<SessionSummary> {
    return this.request(`/sessions/${id}`);
  }

  submitLabel(id: string, label: Label, note?: string): Promise<{ phase: string }> {
    return this.request(`/sessions/${id}/label`, {
      method: "POST",
      body: JSON.stringify(note === undefined ? { label } : { label, note }),
    });
  }

  requestNext(id: string): Promise<{ job_id: string; status: string }> {
    return this.request(`/sessions/${id}/next`, { method: "POST" });
  }

  jobStatus(id: string, jobId: string): Promise<{ status: string; result?: JobResult; error?: string }> {
    return this.request(`/sessions/${id}/jobs/${jobId}`);
  }

  /** Poll a fit job until it finishes; resolves with the recommendation. */
  pollJob(
    id: string,
    jobId: string,
    intervalMs = 2000,
    sleep: (ms: number) => Promise<void> = (ms) => new Promise((r) => setTimeout(r, ms)),
  ): Promise<JobResult> {
    const poll = async (): Promise<JobResult> => {
      for (;;) {
        const job = await this.jobStatus(id, jobId);
        if (job.status === "done" && job.result) return job.result;
        if (job.status === "failed") throw new ApiError(500, job.error ?? "fit job failed");
        await sleep(intervalMs);
      }
    };
    return poll();
  }

  getSlice(id: string, axis: number | null, value: number | null, resolution = 50): Promise<SliceData> {
    const params = new URLSearchParams({ resolution: String(resolution) });
    if (axis !== null && value !== null) {
      params.set("axis", String(axis));
      params.set("value", String(value));
    }
    return this.request(`/sessions/${id}/slice?${params.toString()}`);
  }

  getReport(id: string, checkpoint = false): Promise<Record<string, unknown>> {
    return this.request(`/sessions/${id}/report?checkpoint=${checkpoint ? 1 : 0}`);
  }
}

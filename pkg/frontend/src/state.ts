/** View-model for one live session: server state mirrored through GETs only.
 *
 * The model never fabricates labels or history locally; a hard refresh (a
 * fresh view-model) reconstructs the identical view from the API.
 */

import {
  Label,
  LABEL_CANT_TELL,
  LABEL_PREFER_NEW,
  LABEL_PREFER_PREVIOUS,
  SessionApi,
  SessionSummary,
  SliceData,
} from "./api.js";

export interface SliceSelection {
  axis: number | null;
  value: number | null;
}

export class SessionViewModel {
  summary: SessionSummary | null = null;
  slice: SliceData | null = null;
  sliceSelection: SliceSelection = { axis: null, value: null };
  lastError: string | null = null;
  /** true while a label POST or fit poll is in flight (guards double clicks) */
  inFlight = false;
  fitting = false;

  constructor(
    private api: SessionApi,
    public sessionId: string,
    private pollIntervalMs = 2000,
    private sleep: (ms: number) => Promise<void> = (ms) => new Promise((r) => setTimeout(r, ms)),
  ) {}

  /** Rebuild the whole view from GET endpoints (used on load and refresh). */
  async refresh(): Promise<void> {
    this.summary = await this.api.getSession(this.sessionId);
    if (this.sliceSelection.axis !== null || this.summary.dim === 2) {
      await this.refreshSlice();
    }
  }

  async refreshSlice(): Promise<void> {
    try {
      this.slice = await this.api.getSlice(
        this.sessionId,
        this.sliceSelection.axis,
        this.sliceSelection.value,
      );
    } catch {
      this.slice = null; // no trained model yet: render the placeholder
    }
  }

  get phase(): string {
    return this.summary?.phase ?? "unknown";
  }

  get canJudge(): boolean {
    return !!this.summary?.pending && !this.inFlight && !this.summary.busy;
  }

  get canRequestNext(): boolean {
    return (
      this.phase === "interactive" &&
      !this.summary?.pending &&
      !this.inFlight &&
      !this.summary?.busy
    );
  }

  /** Submit a judgment; returns false when ignored (no pending / in flight). */
  async judge(label: Label, note?: string): Promise<boolean> {
    if (!this.canJudge) return false;
    this.inFlight = true;
    try {
      await this.api.submitLabel(this.sessionId, label, note);
      await this.refresh();
      this.lastError = null;
      return true;
    } catch (err) {
      this.lastError = String(err);
      return false;
    } finally {
      this.inFlight = false;
    }
  }

  preferNew(): Promise<boolean> {
    return this.judge(LABEL_PREFER_NEW as Label);
  }

  preferPrevious(): Promise<boolean> {
    return this.judge(LABEL_PREFER_PREVIOUS as Label);
  }

  cantTell(): Promise<boolean> {
    return this.judge(LABEL_CANT_TELL as Label);
  }

  /** Guarded stop action: marks the new candidate as not preferred. */
  stopRunFlawed(): Promise<boolean> {
    return this.judge(LABEL_PREFER_PREVIOUS as Label, "stop run: flawed material");
  }

  /** Ask for the next configuration; polls the fit job until it lands. */
  async requestNext(): Promise<boolean> {
    if (!this.canRequestNext) return false;
    this.inFlight = true;
    this.fitting = true;
    try {
      const { job_id } = await this.api.requestNext(this.sessionId);
      await this.api.pollJob(this.sessionId, job_id, this.pollIntervalMs, this.sleep);
      await this.refresh();
      this.lastError = null;
      return true;
    } catch (err) {
      this.lastError = String(err);
      return false;
    } finally {
      this.fitting = false;
      this.inFlight = false;
    }
  }

  async selectSlice(axis: number | null, value: number | null): Promise<void> {
    this.sliceSelection = { axis, value };
    await this.refreshSlice();
  }

  /** History table rows exactly as the server reports them. */
  get history() {
    return this.summary?.history ?? [];
  }
}

/** Contour level for the indifference region: half of the at-maximizer
 * indifference probability (display convention, noted in the legend).
 * No contour is drawn when the learned threshold is zero. */
export function jndContourLevel(pZeroAtMax: number, gammaHat: number, fraction = 0.5): number | null {
  if (gammaHat <= 0 || pZeroAtMax <= 0) return null;
  return pZeroAtMax * fraction;
}

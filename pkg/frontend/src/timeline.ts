// Timeline scrubbing with non-blocking preview fetches. Out-of-order
// responses and failures never corrupt state: each fetch carries a
// generation number and only the newest result lands; a failed or
// out-of-date preview is kept on screen and flagged stale.

import { ApiClient } from "./api.js";
import type { RenderModeName, RenderResponse } from "./types.js";

export interface PreviewState {
  frame: number;
  mode: RenderModeName;
  response: RenderResponse | null;
  stale: boolean;
  error: string | null;
}

export type PreviewListener = (state: PreviewState) => void;
export type ToastListener = (message: string) => void;

export class Timeline {
  frame = 1;
  mode: RenderModeName = "joint";
  full = false;

  private generation = 0;
  private state: PreviewState = {
    frame: 1,
    mode: "joint",
    response: null,
    stale: true,
    error: null,
  };
  private previewListeners: PreviewListener[] = [];
  private toastListeners: ToastListener[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly sceneId: () => string,
    private readonly frameCount: () => number,
  ) {}

  onPreview(listener: PreviewListener): void {
    this.previewListeners.push(listener);
  }

  onToast(listener: ToastListener): void {
    this.toastListeners.push(listener);
  }

  get preview(): PreviewState {
    return this.state;
  }

  setMode(mode: RenderModeName): Promise<void> {
    this.mode = mode;
    return this.refresh();
  }

  scrub(frame: number): Promise<void> {
    const clamped = Math.min(Math.max(frame, 1), Math.max(this.frameCount(), 1));
    this.frame = clamped;
    return this.refresh();
  }

  /** Re-fetch the current frame's preview (after edits, mode flips, scrubs). */
  async refresh(): Promise<void> {
    const generation = ++this.generation;
    const frame = this.frame;
    const mode = this.mode;
    this.state = { ...this.state, stale: true };
    this.emit();
    try {
      const response = await this.api.renderPreview(this.sceneId(), frame, mode, this.full);
      if (generation !== this.generation) return; // superseded by a newer scrub
      this.state = { frame, mode, response, stale: false, error: null };
    } catch (err) {
      if (generation !== this.generation) return;
      const message = err instanceof Error ? err.message : String(err);
      this.state = { ...this.state, stale: true, error: message };
      for (const listener of this.toastListeners) listener(`preview failed: ${message}`);
    }
    this.emit();
  }

  private emit(): void {
    for (const listener of this.previewListeners) listener(this.state);
  }
}

// Run status polling with a monotone progress guard.

import { ApiClient } from "./api.js";
import { RunStatusDoc } from "./types.js";

export interface MonitorView {
  state: RunStatusDoc["state"];
  progress: number; // never decreases across renders
  queuePosition: number | null;
  error: string | null;
  done: boolean;
}

export class RunMonitor {
  private best = 0;

  constructor(private client: ApiClient, private runId: string) {}

  view(status: RunStatusDoc): MonitorView {
    this.best = Math.max(this.best, status.progress);
    return {
      state: status.state,
      progress: this.best,
      queuePosition: status.queue_position,
      error: status.error,
      done: status.state === "completed" || status.state === "failed",
    };
  }

  /** Poll until the run finishes; invokes render on every sample. */
  async watch(
    render: (view: MonitorView) => void,
    intervalMs = 250,
    sleep: (ms: number) => Promise<void> = (ms) => new Promise((r) => setTimeout(r, ms)),
  ): Promise<MonitorView> {
    for (;;) {
      const view = this.view(await this.client.getRun(this.runId));
      render(view);
      if (view.done) return view;
      await sleep(intervalMs);
    }
  }
}

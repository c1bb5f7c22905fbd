// Page controller: wires the API client to render sinks. No DOM access here,
// so the whole flow is testable with a fake fetch; main.ts binds real
// elements. The controller itself never computes radio quantities.

import { ApiClient } from "./api.js";
import {
  ScenarioFormState,
  canonicalJson,
  checkForm,
  defaultForm,
  formToSpec,
  specToForm,
} from "./form.js";
import { RunMonitor, MonitorView } from "./monitor.js";
import { PreviewScene, buildScene } from "./preview.js";
import { PreviewDoc, SpecDoc, StatsDoc } from "./types.js";
import { IQPoint, WaterfallMatrix, StatsRow, decodeSnapshot, parseWaterfallCsv, statsTableRows } from "./viewers.js";

export interface Sinks {
  specText(text: string): void;
  fieldErrors(errors: { field: string; reason: string }[]): void;
  previewScene(scene: PreviewScene, raw: PreviewDoc): void;
  previewStale(message: string): void;
  monitor(view: MonitorView): void;
  waterfall(matrix: WaterfallMatrix): void;
  constellation(points: IQPoint[], snapshot: number): void;
  statsTable(rows: StatsRow[], raw: StatsDoc): void;
  notice(message: string): void;
}

export interface AppConfig {
  previewWidth: number;
  previewHeight: number;
}

export class AppController {
  form: ScenarioFormState = defaultForm();
  runId: string | null = null;
  private lastValidSpecText = "";

  constructor(
    private client: ApiClient,
    private sinks: Sinks,
    private config: AppConfig = { previewWidth: 480, previewHeight: 360 },
  ) {}

  /** Re-render the generated document; keeps the last valid text on errors. */
  renderSpec(): SpecDoc | null {
    const errors = checkForm(this.form);
    this.sinks.fieldErrors(errors);
    if (errors.length > 0) {
      this.sinks.specText(this.lastValidSpecText);
      return null;
    }
    const doc = formToSpec(this.form);
    this.lastValidSpecText = canonicalJson(doc);
    this.sinks.specText(this.lastValidSpecText);
    return doc;
  }

  /** Paste path: repopulate the form from an externally edited document. */
  loadSpecText(text: string): void {
    const doc = JSON.parse(text) as SpecDoc;
    this.form = specToForm(doc);
    this.form.dirty = true;
    this.renderSpec();
  }

  /**
   * Register the experiment (queued, not executed) so the server computes the
   * preview; the displayed coordinates are the endpoint's, never local.
   */
  async refreshPreview(): Promise<void> {
    const doc = this.renderSpec();
    if (doc === null) return;
    try {
      const created = await this.client.createExperiment(doc, await specKey(doc));
      this.runId = created.run_id;
      const preview = await this.client.preview(created.run_id);
      const scene = buildScene(preview, this.config.previewWidth, this.config.previewHeight);
      this.sinks.previewScene(scene, preview);
    } catch (e) {
      this.sinks.previewStale(String(e));
    }
  }

  async launch(): Promise<MonitorView | null> {
    if (this.runId === null) await this.refreshPreview();
    if (this.runId === null) return null;
    await this.client.startRun(this.runId);
    const monitor = new RunMonitor(this.client, this.runId);
    const final = await monitor.watch((view) => this.sinks.monitor(view));
    if (final.state === "completed") await this.loadResultViewers();
    return final;
  }

  async loadResultViewers(ue = 0, snapshot = 0): Promise<void> {
    if (this.runId === null) return;
    try {
      const csv = await this.client.waterfallCsv(this.runId, ue);
      this.sinks.waterfall(parseWaterfallCsv(csv));
    } catch (e) {
      this.sinks.notice(`waterfall unavailable: ${e}`);
    }
    try {
      const doc = formToSpec(this.form);
      const bytes = await this.client.iqBytes(this.runId, ue);
      const points = decodeSnapshot(
        bytes,
        doc.capture.num_subcarriers,
        doc.capture.num_symbols,
        snapshot,
      );
      this.sinks.constellation(points, snapshot);
    } catch (e) {
      this.sinks.notice(`constellation unavailable: ${e}`);
    }
    try {
      const stats = await this.client.stats(this.runId);
      this.sinks.statsTable(statsTableRows(stats), stats);
    } catch {
      this.sinks.notice("no comparison stored for this run yet");
    }
  }

  async compareWith(otherRunId: string, ue = 0): Promise<void> {
    if (this.runId === null) return;
    const stats = await this.client.compare(this.runId, otherRunId, ue);
    this.sinks.statsTable(statsTableRows(stats), stats);
  }
}

/** Stable idempotency key for a spec document (pure content hash). */
export async function specKey(doc: SpecDoc): Promise<string> {
  const text = canonicalJson(doc);
  // FNV-1a over the canonical text: no crypto dependency needed for a
  // client-side dedup key.
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return "form-" + hash.toString(16).padStart(8, "0");
}

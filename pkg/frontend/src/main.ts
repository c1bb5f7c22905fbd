// DOM bootstrap: binds the controller to the page. All data shown in the
// panels flows out of the AppController sinks.

import { ApiClient } from "./api.js";
import { AppController, Sinks } from "./app.js";
import { defaultForm } from "./form.js";
import { Ctx2D, drawScene } from "./preview.js";
import { drawConstellation, drawWaterfall } from "./viewers.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function ctx(canvas: HTMLCanvasElement): Ctx2D {
  const c = canvas.getContext("2d");
  if (!c) throw new Error("2d context unavailable");
  return c as unknown as Ctx2D;
}

function main(): void {
  const baseUrl = (window as any).NEXTSENSE_BASE_URL ?? "";
  const client = new ApiClient(baseUrl);

  const previewCanvas = el<HTMLCanvasElement>("preview-canvas");
  const waterfallCanvas = el<HTMLCanvasElement>("waterfall-canvas");
  const constellationCanvas = el<HTMLCanvasElement>("constellation-canvas");

  const sinks: Sinks = {
    specText: (text) => (el<HTMLTextAreaElement>("spec-json").value = text),
    fieldErrors: (errors) => {
      el("form-errors").textContent = errors.map((e) => `${e.field}: ${e.reason}`).join("\n");
    },
    previewScene: (scene) => {
      el("preview-banner").textContent = "";
      drawScene(ctx(previewCanvas), scene, previewCanvas.width, previewCanvas.height);
    },
    previewStale: (message) => {
      el("preview-banner").textContent = `preview is stale: ${message}`;
    },
    monitor: (view) => {
      el<HTMLProgressElement>("run-progress").value = view.progress;
      el("run-state").textContent =
        view.state + (view.queuePosition !== null ? ` (queue #${view.queuePosition})` : "");
      el("run-error").textContent = view.error ?? "";
    },
    waterfall: (matrix) =>
      drawWaterfall(ctx(waterfallCanvas), matrix, waterfallCanvas.width, waterfallCanvas.height),
    constellation: (points) =>
      drawConstellation(
        ctx(constellationCanvas),
        points,
        constellationCanvas.width,
        constellationCanvas.height,
      ),
    statsTable: (rows) => {
      const table = el<HTMLTableElement>("stats-table");
      table.innerHTML = "";
      for (const row of rows) {
        const tr = table.insertRow();
        tr.insertCell().textContent = row.label;
        tr.insertCell().textContent = row.value;
      }
    },
    notice: (message) => (el("notices").textContent = message),
  };

  const app = new AppController(client, sinks);

  const bind = (id: string, apply: (value: string) => void) => {
    el<HTMLInputElement>(id).addEventListener("input", (ev) => {
      apply((ev.target as HTMLInputElement).value);
      app.form.dirty = true;
      app.renderSpec();
    });
  };

  bind("f-name", (v) => (app.form.name = v));
  bind("f-seed", (v) => (app.form.seed = Number(v)));
  bind("f-duration", (v) => (app.form.durationS = Number(v)));
  bind("f-interval", (v) => (app.form.snapshotIntervalS = Number(v)));
  bind("f-scs", (v) => (app.form.radio.subcarrier_spacing_khz = Number(v)));
  bind("f-bandwidth", (v) => (app.form.radio.bandwidth_mhz = Number(v)));
  bind("f-txpower", (v) => (app.form.radio.tx_power_dbm = Number(v)));
  bind("f-ue-speed", (v) => (app.form.ues[0].speedMps = Number(v)));
  bind("f-ue-direction", (v) => (app.form.ues[0].directionDeg = Number(v)));
  bind("f-ue-logic", (v) => {
    app.form.ues[0].mobilityKind = v as "static" | "linear_bounce" | "waypoint";
  });
  bind("f-ue-channel", (v) => (app.form.ues[0].channel = v));

  el("btn-reset").addEventListener("click", () => {
    app.form = defaultForm();
    app.renderSpec();
  });
  el("btn-paste").addEventListener("click", () => {
    try {
      app.loadSpecText(el<HTMLTextAreaElement>("spec-json").value);
    } catch (e) {
      sinks.notice(`could not parse pasted document: ${e}`);
    }
  });
  el("btn-preview").addEventListener("click", () => void app.refreshPreview());
  el("btn-run").addEventListener("click", () => void app.launch());
  el("btn-compare").addEventListener("click", () => {
    const other = el<HTMLInputElement>("f-compare-run").value;
    if (other) void app.compareWith(other);
  });

  app.renderSpec();
}

document.addEventListener("DOMContentLoaded", main);

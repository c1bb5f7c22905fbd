// Result viewers: waterfall heatmap, constellation scatter, stats table.
// Every value rendered here was fetched from the API; this module only
// parses, decimates, and colors.

import { Ctx2D } from "./preview.js";
import { StatsDoc } from "./types.js";

export interface WaterfallMatrix {
  subcarriers: number;
  snapshots: number;
  db: number[][]; // [subcarrier][snapshot]
}

export function parseWaterfallCsv(text: string): WaterfallMatrix {
  const lines = text.trim().split("\n");
  if (lines.length < 2 || !lines[0].startsWith("subcarrier")) {
    throw new Error("malformed waterfall CSV");
  }
  const db = lines.slice(1).map((line) => line.split(",").slice(1).map(Number));
  return { subcarriers: db.length, snapshots: db[0]?.length ?? 0, db };
}

/** Blue-to-yellow ramp over the matrix's own dynamic range. */
export function heatColor(value: number, lo: number, hi: number): string {
  const t = hi > lo ? Math.min(Math.max((value - lo) / (hi - lo), 0), 1) : 0;
  const r = Math.round(20 + 235 * t);
  const g = Math.round(40 + 200 * t);
  const b = Math.round(120 - 90 * t);
  return `rgb(${r},${g},${b})`;
}

export function drawWaterfall(ctx: Ctx2D, m: WaterfallMatrix, width: number, height: number): void {
  ctx.clearRect(0, 0, width, height);
  let lo = Infinity;
  let hi = -Infinity;
  for (const row of m.db) {
    for (const v of row) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  const cw = width / m.snapshots;
  const ch = height / m.subcarriers;
  for (let k = 0; k < m.subcarriers; k++) {
    for (let n = 0; n < m.snapshots; n++) {
      ctx.fillStyle = heatColor(m.db[k][n], lo, hi);
      ctx.fillRect(n * cw, k * ch, Math.ceil(cw), Math.ceil(ch));
    }
  }
}

export interface IQPoint {
  i: number;
  q: number;
}

export const MAX_CONSTELLATION_POINTS = 4096;

/**
 * Decode one snapshot from the little-endian float32 interleaved iq.bin
 * payload (snapshot-major, then symbol, then subcarrier).
 */
export function decodeSnapshot(
  buffer: ArrayBuffer,
  subcarriers: number,
  symbols: number,
  snapshot: number,
): IQPoint[] {
  const perSnapshot = subcarriers * symbols * 2;
  const all = new Float32Array(buffer);
  const total = all.length / perSnapshot;
  if (snapshot >= total) throw new Error(`snapshot ${snapshot} out of range (${total})`);
  const start = snapshot * perSnapshot;
  const points: IQPoint[] = [];
  for (let idx = 0; idx < subcarriers * symbols; idx++) {
    points.push({ i: all[start + 2 * idx], q: all[start + 2 * idx + 1] });
  }
  return points;
}

/** Uniform fixed-stride decimation down to at most MAX_CONSTELLATION_POINTS. */
export function decimate(points: IQPoint[], cap = MAX_CONSTELLATION_POINTS): IQPoint[] {
  if (points.length <= cap) return points;
  const stride = Math.ceil(points.length / cap);
  const out: IQPoint[] = [];
  for (let i = 0; i < points.length; i += stride) out.push(points[i]);
  return out;
}

export function drawConstellation(ctx: Ctx2D, points: IQPoint[], width: number, height: number): void {
  ctx.clearRect(0, 0, width, height);
  let span = 1e-9;
  for (const p of points) span = Math.max(span, Math.abs(p.i), Math.abs(p.q));
  const half = Math.min(width, height) / 2;
  const cx = width / 2;
  const cy = height / 2;
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.moveTo(0, cy);
  ctx.lineTo(width, cy);
  ctx.moveTo(cx, 0);
  ctx.lineTo(cx, height);
  ctx.stroke();
  ctx.fillStyle = "#2b8cbe";
  for (const p of decimate(points)) {
    const x = cx + (p.i / span) * (half - 4);
    const y = cy - (p.q / span) * (half - 4);
    ctx.fillRect(x - 1, y - 1, 2, 2);
  }
}

export interface StatsRow {
  label: string;
  value: string;
}

export function statsTableRows(stats: StatsDoc): StatsRow[] {
  return [
    { label: "KS statistic D", value: String(stats.ks_d) },
    { label: "KS p-value", value: String(stats.ks_p) },
    { label: "Wasserstein distance", value: String(stats.wasserstein) },
    { label: "Var(|a|)", value: String(stats.var_a) },
    { label: "Var(|b|)", value: String(stats.var_b) },
    { label: "Autocorr lags", value: String(stats.autocorr_a.length) },
  ];
}

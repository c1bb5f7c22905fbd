// Movement-zone preview: the trajectory coordinates come verbatim from the
// preview endpoint; this module only maps world xy onto canvas pixels.

import { PreviewDoc, PreviewUEDoc } from "./types.js";

export interface WorldTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export interface Polyline {
  id: string;
  // Server coordinates, untouched (world x/y per trajectory sample).
  world: [number, number][];
  // Canvas-space pixels after the shared transform.
  pixels: [number, number][];
}

export interface PreviewScene {
  transform: WorldTransform;
  boxPixels: { x: number; y: number; w: number; h: number };
  polylines: Polyline[];
  markers: { id: string; x: number; y: number }[];
}

export function fitTransform(
  lo: number[],
  hi: number[],
  width: number,
  height: number,
  margin = 20,
): WorldTransform {
  const spanX = Math.max(hi[0] - lo[0], 1e-9);
  const spanY = Math.max(hi[1] - lo[1], 1e-9);
  const scale = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY);
  return {
    scale,
    offsetX: margin - lo[0] * scale,
    offsetY: margin - lo[1] * scale,
  };
}

export function toPixel(t: WorldTransform, x: number, y: number): [number, number] {
  return [x * t.scale + t.offsetX, y * t.scale + t.offsetY];
}

export function buildScene(preview: PreviewDoc, width: number, height: number): PreviewScene {
  // One shared bounding box over every UE's area so all polylines share axes.
  const lo = [Infinity, Infinity];
  const hi = [-Infinity, -Infinity];
  for (const ue of preview.ues) {
    lo[0] = Math.min(lo[0], ue.mobility_area.lo[0]);
    lo[1] = Math.min(lo[1], ue.mobility_area.lo[1]);
    hi[0] = Math.max(hi[0], ue.mobility_area.hi[0]);
    hi[1] = Math.max(hi[1], ue.mobility_area.hi[1]);
  }
  const transform = fitTransform(lo, hi, width, height);
  const [bx, by] = toPixel(transform, lo[0], lo[1]);
  const [bx2, by2] = toPixel(transform, hi[0], hi[1]);
  const polylines = preview.ues.map((ue) => polylineFor(ue, transform));
  return {
    transform,
    boxPixels: { x: bx, y: by, w: bx2 - bx, h: by2 - by },
    polylines,
    markers: polylines.map((p) => ({
      id: p.id,
      x: p.pixels[0][0],
      y: p.pixels[0][1],
    })),
  };
}

function polylineFor(ue: PreviewUEDoc, t: WorldTransform): Polyline {
  const world = ue.positions.map((p) => [p[0], p[1]] as [number, number]);
  return {
    id: ue.id,
    world,
    pixels: world.map(([x, y]) => toPixel(t, x, y)),
  };
}

// Minimal 2D-context surface so rendering stays testable without a DOM.
export interface Ctx2D {
  strokeStyle: string;
  fillStyle: string;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
}

const COLORS = ["#2b8cbe", "#e34a33", "#31a354", "#756bb1", "#636363"];

export function drawScene(ctx: Ctx2D, scene: PreviewScene, width: number, height: number): void {
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(scene.boxPixels.x, scene.boxPixels.y, scene.boxPixels.w, scene.boxPixels.h);
  scene.polylines.forEach((line, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.beginPath();
    line.pixels.forEach(([x, y], j) => (j === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
    ctx.fillStyle = COLORS[i % COLORS.length];
    const [mx, my] = line.pixels[0];
    ctx.fillRect(mx - 3, my - 3, 6, 6);
    ctx.fillText(line.id, mx + 6, my - 6);
  });
}

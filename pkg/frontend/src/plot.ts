/**
 * Strip-chart geometry and rendering. The mapping from samples to
 * pixel-space polylines is pure (and unit-tested); the canvas wrapper
 * is a thin consumer of it.
 */

import type { Sample } from "./ringbuffer.js";

export interface StripLayout {
  points: Array<[number, number]>;
  tMin: number;
  tMax: number;
  yMin: number;
  yMax: number;
}

export function stripLayout(
  samples: readonly Sample[],
  pick: (s: Sample) => number,
  width: number,
  height: number,
): StripLayout {
  if (samples.length === 0) {
    return { points: [], tMin: 0, tMax: 1, yMin: -1, yMax: 1 };
  }
  const tMin = samples[0].t;
  const tMax = Math.max(samples[samples.length - 1].t, tMin + 1e-9);
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const s of samples) {
    const y = pick(s);
    if (y < yMin) yMin = y;
    if (y > yMax) yMax = y;
  }
  if (yMax - yMin < 1e-9) {
    // flat series: pad the range so the line sits mid-strip
    yMin -= 1;
    yMax += 1;
  }
  const points: Array<[number, number]> = samples.map((s) => [
    ((s.t - tMin) / (tMax - tMin)) * width,
    height - ((pick(s) - yMin) / (yMax - yMin)) * height,
  ]);
  return { points, tMin, tMax, yMin, yMax };
}

interface Canvas2DLike {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
}

export function drawStrip(
  ctx: Canvas2DLike,
  samples: readonly Sample[],
  pick: (s: Sample) => number,
  width: number,
  height: number,
  color: string,
): StripLayout {
  const layout = stripLayout(samples, pick, width, height);
  ctx.clearRect(0, 0, width, height);
  if (layout.points.length >= 2) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(layout.points[0][0], layout.points[0][1]);
    for (const [x, y] of layout.points.slice(1)) ctx.lineTo(x, y);
    ctx.stroke();
  }
  return layout;
}

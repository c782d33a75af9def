/**
 * Canvas plotting primitives: scales, axes, polylines, heat cells.
 *
 * Everything is deterministic: fixed layout constants, no randomness,
 * no timestamps. Rendering the same inputs twice produces byte-identical
 * PNG files.
 */

import { createCanvas, SKRSContext2D } from "@napi-rs/canvas";

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 720,
  height: 480,
  margin: { top: 40, right: 30, bottom: 55, left: 75 },
};

export interface Scale {
  (value: number): number;
  domain: [number, number];
  log: boolean;
}

export function makeScale(
  domain: [number, number],
  range: [number, number],
  log = false,
): Scale {
  const [d0, d1] = log ? [Math.log10(domain[0]), Math.log10(domain[1])] : domain;
  const span = d1 - d0 || 1;
  const fn = ((value: number) => {
    const v = log ? Math.log10(value) : value;
    return range[0] + ((v - d0) / span) * (range[1] - range[0]);
  }) as Scale;
  fn.domain = domain;
  fn.log = log;
  return fn;
}

/** Round tick positions: decades for log scales, nice steps otherwise. */
export function ticks(domain: [number, number], log: boolean, count = 6): number[] {
  if (log) {
    const lo = Math.ceil(Math.log10(domain[0]) - 1e-9);
    const hi = Math.floor(Math.log10(domain[1]) + 1e-9);
    const out: number[] = [];
    for (let p = lo; p <= hi; p++) out.push(10 ** p);
    if (out.length >= 2) return out;
    return [domain[0], domain[1]];
  }
  const span = domain[1] - domain[0] || 1;
  const step = 10 ** Math.floor(Math.log10(span / count));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen =
    candidates.find((s) => span / s <= count) ?? candidates[candidates.length - 1]!;
  const out: number[] = [];
  for (
    let v = Math.ceil(domain[0] / chosen) * chosen;
    v <= domain[1] + 1e-12 * span;
    v += chosen
  ) {
    out.push(Math.abs(v) < 1e-12 * span ? 0 : v);
  }
  return out;
}

const fmt = (v: number): string => {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) return String(Number(v.toPrecision(4)));
  return v.toExponential(0);
};

export interface Axes {
  ctx: SKRSContext2D;
  x: Scale;
  y: Scale;
  frame: Frame;
}

export function newFigure(frame: Frame = DEFAULT_FRAME) {
  const canvas = createCanvas(frame.width, frame.height);
  const ctx = canvas.getContext("2d");
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, frame.width, frame.height);
  return { canvas, ctx };
}

export function drawAxes(
  ctx: SKRSContext2D,
  frame: Frame,
  x: Scale,
  y: Scale,
  labels: { title: string; xlabel: string; ylabel: string },
): Axes {
  const { margin, width, height } = frame;
  ctx.strokeStyle = "#222222";
  ctx.lineWidth = 1;
  ctx.strokeRect(
    margin.left,
    margin.top,
    width - margin.left - margin.right,
    height - margin.top - margin.bottom,
  );

  ctx.fillStyle = "#111111";
  ctx.font = "15px sans-serif";
  ctx.textAlign = "center";
  ctx.fillText(labels.title, width / 2, margin.top - 15);

  ctx.font = "12px sans-serif";
  for (const t of ticks(x.domain, x.log)) {
    const px = x(t);
    ctx.strokeStyle = "#cccccc";
    ctx.beginPath();
    ctx.moveTo(px, margin.top);
    ctx.lineTo(px, height - margin.bottom);
    ctx.stroke();
    ctx.fillText(fmt(t), px, height - margin.bottom + 18);
  }
  ctx.textAlign = "right";
  for (const t of ticks(y.domain, y.log)) {
    const py = y(t);
    ctx.strokeStyle = "#cccccc";
    ctx.beginPath();
    ctx.moveTo(margin.left, py);
    ctx.lineTo(width - margin.right, py);
    ctx.stroke();
    ctx.fillText(fmt(t), margin.left - 6, py + 4);
  }

  ctx.textAlign = "center";
  ctx.font = "13px sans-serif";
  ctx.fillText(labels.xlabel, width / 2, height - 12);
  ctx.save();
  ctx.translate(16, height / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(labels.ylabel, 0, 0);
  ctx.restore();

  return { ctx, x, y, frame };
}

export interface LineStyle {
  color: string;
  width?: number;
  dash?: number[];
  markers?: boolean;
}

export function polyline(axes: Axes, xs: number[], ys: number[], style: LineStyle) {
  const { ctx, x, y } = axes;
  ctx.strokeStyle = style.color;
  ctx.lineWidth = style.width ?? 1.8;
  ctx.setLineDash(style.dash ?? []);
  ctx.beginPath();
  xs.forEach((value, i) => {
    const px = x(value);
    const py = y(ys[i]!);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
  ctx.setLineDash([]);
  if (style.markers) {
    ctx.fillStyle = style.color;
    xs.forEach((value, i) => {
      ctx.beginPath();
      ctx.arc(x(value), y(ys[i]!), 3.2, 0, 2 * Math.PI);
      ctx.fill();
    });
  }
}

export function horizontalLine(axes: Axes, value: number, style: LineStyle) {
  const { ctx, y, frame } = axes;
  ctx.strokeStyle = style.color;
  ctx.lineWidth = style.width ?? 1.4;
  ctx.setLineDash(style.dash ?? [6, 4]);
  ctx.beginPath();
  ctx.moveTo(frame.margin.left, y(value));
  ctx.lineTo(frame.width - frame.margin.right, y(value));
  ctx.stroke();
  ctx.setLineDash([]);
}

export function annotate(
  axes: Axes,
  text: string,
  px: number,
  py: number,
  color = "#111111",
) {
  const { ctx } = axes;
  ctx.fillStyle = color;
  ctx.font = "12px sans-serif";
  ctx.textAlign = "left";
  ctx.fillText(text, px, py);
}

export function legend(axes: Axes, entries: { label: string; style: LineStyle }[]) {
  const { ctx, frame } = axes;
  const x0 = frame.width - frame.margin.right - 190;
  let y0 = frame.margin.top + 16;
  ctx.font = "12px sans-serif";
  ctx.textAlign = "left";
  for (const entry of entries) {
    ctx.strokeStyle = entry.style.color;
    ctx.lineWidth = entry.style.width ?? 1.8;
    ctx.setLineDash(entry.style.dash ?? []);
    ctx.beginPath();
    ctx.moveTo(x0, y0 - 4);
    ctx.lineTo(x0 + 28, y0 - 4);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#111111";
    ctx.fillText(entry.label, x0 + 34, y0);
    y0 += 17;
  }
}

/** Perceptually ordered ramp from dark blue to light yellow. */
export function heatColor(v: number): string {
  const t = Math.min(1, Math.max(0, v));
  const r = Math.round(255 * Math.min(1, 0.1 + 1.5 * t));
  const g = Math.round(255 * Math.min(1, Math.max(0, 1.6 * t - 0.25)));
  const b = Math.round(255 * Math.max(0, 0.45 - 0.3 * t + 0.8 * (1 - t) ** 3));
  return `rgb(${r},${g},${b})`;
}

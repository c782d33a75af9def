/**
 * The four figure kinds rendered from covercorr output files.
 *
 *   decay    — t^{d/2} C(t) against t, optional analytic reference line
 *              and expansion partial sums from a report JSON
 *   residual — log-log residuals after N = 1, 2, 3 expansion terms with
 *              fitted slope annotations
 *   surface  — resonance surface: spectral-radius curve (one torus
 *              dimension) or heatmap (two), flagged nodes highlighted
 *   drift    — moving-target prediction vs exact value
 *
 * Rendering never recomputes mathematics: every curve is a pure function
 * of the file contents (fitting a straight line to displayed points and
 * evaluating a supplied polynomial for display are the only arithmetic).
 */

import { readFileSync, writeFileSync } from "fs";

import { numericColumn, readCsv, requireColumns, SchemaError, Table } from "./csv";
import {
  annotate,
  DEFAULT_FRAME,
  drawAxes,
  Frame,
  heatColor,
  horizontalLine,
  legend,
  LineStyle,
  makeScale,
  newFigure,
  polyline,
} from "./draw";

export type FigureKind = "decay" | "residual" | "surface" | "drift";

export interface FigureSpec {
  kind: FigureKind;
  input: string;
  output: string;
  /** Optional analytic reference level (e.g. 1/sqrt(pi)) for decay plots. */
  ref?: number;
  /** Optional expansion report JSON for partial-sum overlays. */
  report?: string;
}

const PALETTE = ["#1668a8", "#c23b22", "#2c8a4b", "#7d4ec2", "#b08a00"];

interface Plotted {
  frame: Frame;
  pngBytes: Buffer;
}

export function render(spec: FigureSpec): void {
  const painter = PAINTERS[spec.kind];
  if (!painter) {
    const kinds = Object.keys(PAINTERS).join(" | ");
    throw new SchemaError(`unknown figure kind '${spec.kind}' (use ${kinds})`);
  }
  const { pngBytes } = painter(spec);
  writeFileSync(spec.output, pngBytes);
}

// -- decay -------------------------------------------------------------------

function paintDecay(spec: FigureSpec): Plotted {
  const table = readCsv(spec.input);
  const index = requireColumns(table, ["t", "t_pow_d2_re"], "decay figure");
  const t = numericColumn(table, index, "t");
  const scaled = numericColumn(table, index, "t_pow_d2_re");

  const frame = DEFAULT_FRAME;
  const { canvas, ctx } = newFigure(frame);
  const ys = [...scaled, ...(spec.ref !== undefined ? [spec.ref] : [])];
  const pad = (Math.max(...ys) - Math.min(...ys)) * 0.15 || 0.01;
  const x = makeScale([Math.min(...t), Math.max(...t)], xRange(frame), true);
  const y = makeScale(
    [Math.min(...ys) - pad, Math.max(...ys) + pad],
    yRange(frame),
  );
  const axes = drawAxes(ctx, frame, x, y, {
    title: "normalized correlation decay",
    xlabel: "t",
    ylabel: "t^(d/2) C(t)",
  });

  const entries: { label: string; style: LineStyle }[] = [
    { label: "measured", style: { color: PALETTE[0]!, markers: true } },
  ];
  polyline(axes, t, scaled, { color: PALETTE[0]!, markers: true });

  if (spec.report !== undefined) {
    const report = JSON.parse(readFileSync(spec.report, "utf8")) as {
      kappa: number;
      c: [number, number][];
    };
    for (let N = 1; N <= Math.min(report.c.length, 3); N++) {
      const partial = t.map((tv) => {
        let sum = 0;
        for (let j = 0; j < N; j++) sum += report.c[j]![0] * tv ** -j;
        return report.kappa * sum;
      });
      const style = {
        color: PALETTE[N]!,
        dash: [8 - 2 * N, 3],
        width: 1.3,
      };
      polyline(axes, t, partial, style);
      entries.push({ label: `partial sum N=${N}`, style: { ...style, markers: false } });
    }
  }
  if (spec.ref !== undefined) {
    horizontalLine(axes, spec.ref, { color: "#555555" });
    entries.push({
      label: `reference ${spec.ref.toPrecision(6)}`,
      style: { color: "#555555", dash: [6, 4] },
    });
  }
  legend(axes, entries);
  return { frame, pngBytes: canvas.toBuffer("image/png") };
}

// -- residual ----------------------------------------------------------------

function paintResidual(spec: FigureSpec): Plotted {
  const table = readCsv(spec.input);
  const index = requireColumns(
    table,
    ["t", "residual_1", "residual_2", "residual_3"],
    "residual figure",
  );
  const t = numericColumn(table, index, "t");

  const frame = DEFAULT_FRAME;
  const { canvas, ctx } = newFigure(frame);
  const series = [1, 2, 3].map((N) => numericColumn(table, index, `residual_${N}`));
  const positive = series.flat().filter((v) => v > 0);
  const x = makeScale([Math.min(...t), Math.max(...t)], xRange(frame), true);
  const y = makeScale(
    [Math.min(...positive) * 0.5, Math.max(...positive) * 2],
    yRange(frame),
    true,
  );
  const axes = drawAxes(ctx, frame, x, y, {
    title: "expansion residuals (log-log)",
    xlabel: "t",
    ylabel: "|residual| / kappa",
  });

  const entries: { label: string; style: { color: string; dash?: number[] } }[] = [];
  series.forEach((res, i) => {
    const keep = res
      .map((v, j) => [t[j]!, v] as const)
      .filter(([, v]) => v > 0);
    const style = { color: PALETTE[i]!, markers: true };
    polyline(axes, keep.map(([a]) => a), keep.map(([, b]) => b), style);
    const slope = fitSlope(
      keep.map(([a]) => Math.log(a)),
      keep.map(([, b]) => Math.log(b)),
    );
    entries.push({
      label: `N=${i + 1}: slope ${slope.toFixed(2)}`,
      style: { color: PALETTE[i]! },
    });
  });
  legend(axes, entries);
  return { frame, pngBytes: canvas.toBuffer("image/png") };
}

/** Least-squares slope of y against x (display annotation only). */
function fitSlope(x: number[], y: number[]): number {
  const n = x.length;
  const mx = x.reduce((s, v) => s + v, 0) / n;
  const my = y.reduce((s, v) => s + v, 0) / n;
  let num = 0;
  let den = 0;
  for (let i = 0; i < n; i++) {
    num += (x[i]! - mx) * (y[i]! - my);
    den += (x[i]! - mx) ** 2;
  }
  return num / den;
}

// -- surface -----------------------------------------------------------------

function paintSurface(spec: FigureSpec): Plotted {
  const table = readCsv(spec.input);
  const twoDim = table.columns.includes("theta_2");
  return twoDim ? paintSurfaceHeatmap(table) : paintSurfaceCurve(table);
}

function paintSurfaceCurve(table: Table): Plotted {
  const index = requireColumns(
    table,
    ["theta_1", "specrad", "gap_ok"],
    "surface figure",
  );
  const theta = numericColumn(table, index, "theta_1");
  const specrad = numericColumn(table, index, "specrad");
  const gapOk = numericColumn(table, index, "gap_ok");

  const frame = DEFAULT_FRAME;
  const { canvas, ctx } = newFigure(frame);
  const x = makeScale([0, 2 * Math.PI], xRange(frame));
  const y = makeScale([0, 1.08], yRange(frame));
  const axes = drawAxes(ctx, frame, x, y, {
    title: "twisted spectral radius over the torus",
    xlabel: "theta",
    ylabel: "specrad(theta)",
  });
  horizontalLine(axes, 1.0, { color: "#888888" });
  polyline(axes, theta, specrad, { color: PALETTE[0]!, markers: true });
  const flagged = theta.filter((_, i) => gapOk[i] === 0);
  ctx.fillStyle = PALETTE[1]!;
  for (const tv of flagged) {
    const i = theta.indexOf(tv);
    ctx.beginPath();
    ctx.arc(x(tv), y(specrad[i]!), 5.5, 0, 2 * Math.PI);
    ctx.fill();
  }
  if (flagged.length > 0) {
    annotate(
      axes,
      `flagged nodes: ${flagged.length} (unit circle reached)`,
      frame.margin.left + 10,
      frame.margin.top + 18,
      PALETTE[1]!,
    );
  }
  return { frame, pngBytes: canvas.toBuffer("image/png") };
}

function paintSurfaceHeatmap(table: Table): Plotted {
  const index = requireColumns(
    table,
    ["theta_1", "theta_2", "specrad"],
    "surface figure",
  );
  const t1 = numericColumn(table, index, "theta_1");
  const t2 = numericColumn(table, index, "theta_2");
  const specrad = numericColumn(table, index, "specrad");
  const axis1 = [...new Set(t1)].sort((a, b) => a - b);
  const axis2 = [...new Set(t2)].sort((a, b) => a - b);

  const frame: Frame = {
    width: 640,
    height: 600,
    margin: { top: 40, right: 90, bottom: 55, left: 75 },
  };
  const { canvas, ctx } = newFigure(frame);
  const x = makeScale([0, 2 * Math.PI], xRange(frame));
  const y = makeScale([2 * Math.PI, 0], yRange(frame));
  const axes = drawAxes(ctx, frame, x, y, {
    title: "twisted spectral radius heatmap",
    xlabel: "theta_1",
    ylabel: "theta_2",
  });
  const step1 = (2 * Math.PI) / axis1.length;
  const step2 = (2 * Math.PI) / axis2.length;
  for (let i = 0; i < t1.length; i++) {
    ctx.fillStyle = heatColor(specrad[i]!);
    const px = x(t1[i]!);
    const py = y(t2[i]! + step2);
    ctx.fillRect(px, py, x(step1) - x(0) + 1, y(0) - y(step2) + 1);
  }
  // color bar
  const barX = frame.width - frame.margin.right + 20;
  for (let i = 0; i <= 100; i++) {
    ctx.fillStyle = heatColor(i / 100);
    const py =
      frame.height -
      frame.margin.bottom -
      ((frame.height - frame.margin.top - frame.margin.bottom) * i) / 100;
    ctx.fillRect(barX, py - 4, 16, 5);
  }
  annotate(axes, "1", barX + 20, frame.margin.top + 8);
  annotate(axes, "0", barX + 20, frame.height - frame.margin.bottom);
  return { frame, pngBytes: canvas.toBuffer("image/png") };
}

// -- drift -------------------------------------------------------------------

function paintDrift(spec: FigureSpec): Plotted {
  const table = readCsv(spec.input);
  const index = requireColumns(
    table,
    ["t", "predicted", "exact_re", "relerr"],
    "drift figure",
  );
  const t = numericColumn(table, index, "t");
  const predicted = numericColumn(table, index, "predicted");
  const exact = numericColumn(table, index, "exact_re");
  const relerr = numericColumn(table, index, "relerr");

  const frame = DEFAULT_FRAME;
  const { canvas, ctx } = newFigure(frame);
  const ys = [...predicted, ...exact];
  const pad = (Math.max(...ys) - Math.min(...ys)) * 0.2 || 0.01;
  const x = makeScale([Math.min(...t), Math.max(...t)], xRange(frame), true);
  const y = makeScale([Math.min(...ys) - pad, Math.max(...ys) + pad], yRange(frame));
  const axes = drawAxes(ctx, frame, x, y, {
    title: "moving-target correlation: prediction vs exact",
    xlabel: "t",
    ylabel: "t^(d/2) C_k(t)",
  });
  polyline(axes, t, exact, { color: PALETTE[0]!, markers: true });
  polyline(axes, t, predicted, { color: PALETTE[1]!, dash: [7, 4], markers: true });
  legend(axes, [
    { label: "exact", style: { color: PALETTE[0]! } },
    { label: "two-term prediction", style: { color: PALETTE[1]!, dash: [7, 4] } },
  ]);
  relerr.forEach((r, i) => {
    annotate(axes, r.toExponential(1), x(t[i]!) - 18, y(predicted[i]!) + 20, "#666666");
  });
  return { frame, pngBytes: canvas.toBuffer("image/png") };
}

const PAINTERS: Record<string, (spec: FigureSpec) => Plotted> = {
  decay: paintDecay,
  residual: paintResidual,
  surface: paintSurface,
  drift: paintDrift,
};

const xRange = (frame: Frame): [number, number] => [
  frame.margin.left,
  frame.width - frame.margin.right,
];
const yRange = (frame: Frame): [number, number] => [
  frame.height - frame.margin.bottom,
  frame.margin.top,
];

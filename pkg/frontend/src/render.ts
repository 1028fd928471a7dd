/**
 * Figure rendering: three CSV schemas in, one SVG out.
 *
 * The renderer never computes mathematics; it draws the CSV values verbatim.
 * The dump mode returns exactly the raw cell strings that would be plotted, so
 * a caller can diff them against the input file.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { Column, CsvError, extractColumns, parseCsv } from "./csv.js";
import { colorRamp, fmt, line, polygon, polyline, svgDocument, text } from "./svg.js";

export type FigureKind = "contraction_surface" | "bound_curve" | "gamma_surface";

export const REQUIRED_COLUMNS: Record<FigureKind, string[]> = {
  contraction_surface: ["lambda", "round", "eps_max"],
  bound_curve: ["n_unlabeled", "gamma", "bound", "complexity_term", "confidence_term"],
  gamma_surface: ["disagreement", "indep", "gamma"],
};

export interface FigureSpec {
  inputCsv: string;
  figureKind: FigureKind;
  outputPath: string;
  title?: string;
  xLabel?: string;
  yLabel?: string;
  zLabel?: string;
}

const WIDTH = 720;
const HEIGHT = 520;

// ---------------------------------------------------------------------------
// Surface plots (x, y, z triples over a complete rectangular grid)
// ---------------------------------------------------------------------------

interface SurfaceAxes {
  x: string;
  y: string;
  z: string;
}

interface Grid {
  xs: number[];
  ys: number[];
  /** z[yi][xi] */
  z: number[][];
  zMin: number;
  zMax: number;
}

function buildGrid(x: Column, y: Column, z: Column): Grid {
  const xs = [...new Set(x.values)].sort((a, b) => a - b);
  const ys = [...new Set(y.values)].sort((a, b) => a - b);
  const lookup = new Map<string, number>();
  for (let i = 0; i < z.values.length; i++) {
    lookup.set(`${x.values[i]}|${y.values[i]}`, z.values[i]);
  }
  const grid = ys.map((yv) =>
    xs.map((xv) => {
      const cell = lookup.get(`${xv}|${yv}`);
      if (cell === undefined) {
        throw new CsvError(`surface grid is incomplete: no row for (${x.name}=${xv}, ${y.name}=${yv})`);
      }
      return cell;
    }),
  );
  const flat = grid.flat();
  return { xs, ys, z: grid, zMin: Math.min(...flat), zMax: Math.max(...flat) };
}

const COS30 = Math.cos(Math.PI / 6);
const TILT = 0.55;
const Z_HEIGHT = 0.85;

function project(xn: number, yn: number, zn: number): [number, number] {
  const u = (xn - yn) * COS30;
  const v = (xn + yn) * 0.5 * TILT + zn * Z_HEIGHT;
  const scale = 270;
  return [WIDTH / 2 + u * scale, HEIGHT - 90 - v * scale];
}

function renderSurface(grid: Grid, axes: SurfaceAxes, title: string, maxNote: string): string {
  const { xs, ys, z, zMin, zMax } = grid;
  const xSpan = xs[xs.length - 1] - xs[0] || 1;
  const ySpan = ys[ys.length - 1] - ys[0] || 1;
  const zSpan = zMax - zMin || 1;
  const xn = (v: number) => (v - xs[0]) / xSpan;
  const yn = (v: number) => (v - ys[0]) / ySpan;
  const zn = (v: number) => (v - zMin) / zSpan;

  interface Cell {
    depth: number;
    shade: number;
    corners: Array<[number, number]>;
  }
  const cells: Cell[] = [];
  for (let yi = 0; yi < ys.length - 1; yi++) {
    for (let xi = 0; xi < xs.length - 1; xi++) {
      const corners: Array<[number, number]> = [
        project(xn(xs[xi]), yn(ys[yi]), zn(z[yi][xi])),
        project(xn(xs[xi + 1]), yn(ys[yi]), zn(z[yi][xi + 1])),
        project(xn(xs[xi + 1]), yn(ys[yi + 1]), zn(z[yi + 1][xi + 1])),
        project(xn(xs[xi]), yn(ys[yi + 1]), zn(z[yi + 1][xi])),
      ];
      const mean = (z[yi][xi] + z[yi][xi + 1] + z[yi + 1][xi + 1] + z[yi + 1][xi]) / 4;
      cells.push({
        depth: xn(xs[xi]) + yn(ys[yi]),
        shade: zn(mean),
        corners,
      });
    }
  }
  // painter order: far cells (large x+y) first, front cells last
  cells.sort((a, b) => b.depth - a.depth);

  const body: string[] = [];
  body.push(text(WIDTH / 2, 28, title, 15, "middle"));

  const origin = project(0, 0, 0);
  const xEnd = project(1, 0, 0);
  const yEnd = project(0, 1, 0);
  const zEnd = project(0, 0, 1);
  body.push(line(origin[0], origin[1], xEnd[0], xEnd[1], "#888888"));
  body.push(line(origin[0], origin[1], yEnd[0], yEnd[1], "#888888"));
  body.push(line(origin[0], origin[1], zEnd[0], zEnd[1], "#888888"));
  body.push(text(xEnd[0] + 6, xEnd[1] + 14, `${axes.x} (${xs[0]}..${xs[xs.length - 1]})`));
  body.push(text(yEnd[0] - 6, yEnd[1] + 14, `${axes.y} (${ys[0]}..${ys[ys.length - 1]})`, 11, "end"));
  body.push(text(zEnd[0], zEnd[1] - 8, `${axes.z} (${zMin}..${zMax})`, 11, "middle"));

  for (const cell of cells) {
    body.push(polygon(cell.corners, colorRamp(cell.shade)));
  }
  body.push(text(WIDTH - 16, HEIGHT - 16, maxNote, 12, "end"));
  return svgDocument(WIDTH, HEIGHT, body);
}

// ---------------------------------------------------------------------------
// Bound curve (multi-series line plot over n_unlabeled)
// ---------------------------------------------------------------------------

const SERIES_COLORS: Record<string, string> = {
  bound: "#c0392b",
  gamma: "#27ae60",
  complexity_term: "#2980b9",
  confidence_term: "#8e44ad",
};

function renderBoundCurve(columns: Map<string, Column>, title: string, xLabel: string, yLabel: string): string {
  const xCol = columns.get("n_unlabeled")!;
  const seriesNames = ["bound", "gamma", "complexity_term", "confidence_term"];
  const margin = { left: 70, right: 30, top: 50, bottom: 55 };
  const plotW = WIDTH - margin.left - margin.right;
  const plotH = HEIGHT - margin.top - margin.bottom;

  const xMin = Math.min(...xCol.values);
  const xMax = Math.max(...xCol.values);
  const allY = seriesNames.flatMap((name) => columns.get(name)!.values);
  const yMin = Math.min(...allY);
  const yMax = Math.max(...allY);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  const sx = (v: number) => margin.left + ((v - xMin) / xSpan) * plotW;
  const sy = (v: number) => margin.top + (1 - (v - yMin) / ySpan) * plotH;

  const body: string[] = [];
  body.push(text(WIDTH / 2, 28, title, 15, "middle"));
  body.push(line(margin.left, margin.top, margin.left, margin.top + plotH, "#333333"));
  body.push(line(margin.left, margin.top + plotH, margin.left + plotW, margin.top + plotH, "#333333"));
  // min/max tick labels carry the raw data range
  body.push(text(margin.left, HEIGHT - margin.bottom + 18, `${xMin}`, 10, "middle"));
  body.push(text(margin.left + plotW, HEIGHT - margin.bottom + 18, `${xMax}`, 10, "middle"));
  body.push(text(margin.left - 8, margin.top + plotH + 4, `${fmt(yMin)}`, 10, "end"));
  body.push(text(margin.left - 8, margin.top + 4, `${fmt(yMax)}`, 10, "end"));
  body.push(text(margin.left + plotW / 2, HEIGHT - 14, xLabel, 12, "middle"));
  body.push(text(18, margin.top - 14, yLabel, 12, "start"));

  for (const name of seriesNames) {
    const col = columns.get(name)!;
    const points: Array<[number, number]> = xCol.values.map((x, i) => [sx(x), sy(col.values[i])]);
    body.push(polyline(points, SERIES_COLORS[name], name));
  }
  seriesNames.forEach((name, i) => {
    const lx = margin.left + plotW - 150;
    const ly = margin.top + 16 + i * 18;
    body.push(line(lx, ly - 4, lx + 22, ly - 4, SERIES_COLORS[name], 3));
    body.push(text(lx + 28, ly, name, 11));
  });
  return svgDocument(WIDTH, HEIGHT, body);
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

function loadColumns(spec: FigureSpec): Map<string, Column> {
  const table = parseCsv(readFileSync(spec.inputCsv, "utf-8"));
  return extractColumns(table, REQUIRED_COLUMNS[spec.figureKind]);
}

export function renderToString(spec: FigureSpec): string {
  const columns = loadColumns(spec);
  switch (spec.figureKind) {
    case "contraction_surface": {
      const grid = buildGrid(columns.get("round")!, columns.get("lambda")!, columns.get("eps_max")!);
      return renderSurface(
        grid,
        { x: spec.xLabel ?? "round", y: spec.yLabel ?? "lambda", z: spec.zLabel ?? "eps_max" },
        spec.title ?? "Worst-view error across rounds and contraction factors",
        `max eps_max = ${maxRaw(columns.get("eps_max")!)}`,
      );
    }
    case "gamma_surface": {
      const grid = buildGrid(columns.get("disagreement")!, columns.get("indep")!, columns.get("gamma")!);
      return renderSurface(
        grid,
        { x: spec.xLabel ?? "disagreement", y: spec.yLabel ?? "indep", z: spec.zLabel ?? "gamma" },
        spec.title ?? "Unlabeled-data benefit vs disagreement and independence",
        `max gamma = ${maxRaw(columns.get("gamma")!)}`,
      );
    }
    case "bound_curve":
      return renderBoundCurve(
        columns,
        spec.title ?? "Risk bound vs unlabeled sample count",
        spec.xLabel ?? "n_unlabeled",
        spec.yLabel ?? "bound terms",
      );
  }
}

function maxRaw(column: Column): string {
  let best = 0;
  for (let i = 1; i < column.values.length; i++) {
    if (column.values[i] > column.values[best]) {
      best = i;
    }
  }
  return column.raw[best];
}

/** Echo the plotted arrays exactly as they appear in the CSV, one line per column. */
export function dumpToString(spec: FigureSpec): string {
  const columns = loadColumns(spec);
  const lines = REQUIRED_COLUMNS[spec.figureKind].map((name) => {
    const col = columns.get(name)!;
    return `${name}: ${col.raw.join(",")}`;
  });
  return lines.join("\n") + "\n";
}

/** Build the full SVG first, then write: a failing input never leaves a partial image. */
export function renderToFile(spec: FigureSpec): void {
  const svg = renderToString(spec);
  writeFileSync(spec.outputPath, svg, "utf-8");
}

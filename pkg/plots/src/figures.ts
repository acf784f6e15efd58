/**
 * Figure builders for the fusion-benchmark CSV outputs.
 *
 * Four figure kinds, one per result class: overlaid fusion ellipses,
 * true-vs-fused trajectories, RMSE-versus-step curves, and the timeline of
 * per-trigger computation counts. Every builder reads the documented CSV
 * schema, never mutates its inputs, and produces a deterministic SVG.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { CsvSchemaError, CsvTable, numeric, readCsvFile, requireColumns } from "./csv.js";
import { extentOf, Figure, LinearScale, padded, PALETTE } from "./svg.js";

export type FigureKind = "ellipses" | "trajectory" | "rmse" | "cost";

export interface FigureSpec {
  /** Input CSV paths; multiple files of the same schema are concatenated. */
  inputs: string[];
  kind: FigureKind;
  /** Output image path (SVG). */
  output: string;
  /** Optional plot title; defaults per kind. */
  title?: string;
}

const REQUIRED: Record<FigureKind, string[]> = {
  ellipses: ["algorithm", "f", "structure_id", "point_index", "x", "y"],
  trajectory: ["step", "series", "x", "y"],
  rmse: ["step", "algorithm", "f", "structure_id", "rmse"],
  cost: ["trigger_time", "algorithm", "inversions", "optimizer_iters", "wall_ns"],
};

const DEFAULT_TITLES: Record<FigureKind, string> = {
  ellipses: "Fusion ellipses across fusion structures",
  trajectory: "True and fused trajectories",
  rmse: "Position RMSE per step",
  cost: "Computation per fusion trigger",
};

interface SeriesPoint {
  x: number;
  y: number;
  order: number;
}

function groupSeries(
  tables: CsvTable[],
  kind: FigureKind,
): Map<string, SeriesPoint[]> {
  const groups = new Map<string, SeriesPoint[]>();
  const push = (key: string, point: SeriesPoint) => {
    const bucket = groups.get(key);
    if (bucket) {
      bucket.push(point);
    } else {
      groups.set(key, [point]);
    }
  };
  for (const table of tables) {
    const cols = requireColumns(table, REQUIRED[kind]);
    const at = (name: string) => cols.get(name)!;
    for (const row of table.rows) {
      if (kind === "ellipses") {
        const key = `${row[at("algorithm")]}/${row[at("f")]}#${row[at("structure_id")]}`;
        push(key, {
          x: numeric(table, row, "x", at("x")),
          y: numeric(table, row, "y", at("y")),
          order: numeric(table, row, "point_index", at("point_index")),
        });
      } else if (kind === "trajectory") {
        push(row[at("series")], {
          x: numeric(table, row, "x", at("x")),
          y: numeric(table, row, "y", at("y")),
          order: numeric(table, row, "step", at("step")),
        });
      } else if (kind === "rmse") {
        const structure = row[at("structure_id")];
        const label =
          structure === "-"
            ? `${row[at("algorithm")]}/${row[at("f")]}`
            : `${row[at("algorithm")]}/${row[at("f")]}#${structure}`;
        push(label, {
          x: numeric(table, row, "step", at("step")),
          y: numeric(table, row, "rmse", at("rmse")),
          order: numeric(table, row, "step", at("step")),
        });
      } else {
        const ops =
          numeric(table, row, "inversions", at("inversions")) +
          numeric(table, row, "optimizer_iters", at("optimizer_iters"));
        push(row[at("algorithm")], {
          x: numeric(table, row, "trigger_time", at("trigger_time")),
          y: ops,
          order: numeric(table, row, "trigger_time", at("trigger_time")),
        });
      }
    }
  }
  if (groups.size === 0) {
    throw new CsvSchemaError("no data rows found in the input tables", "<rows>");
  }
  for (const bucket of groups.values()) {
    bucket.sort((a, b) => a.order - b.order);
  }
  return groups;
}

/** Color families: one hue per algorithm/f, shared by its structures. */
function colorFor(key: string, families: string[]): string {
  const family = key.split("#")[0];
  return PALETTE[families.indexOf(family) % PALETTE.length];
}

export function render(spec: FigureSpec): string {
  if (spec.inputs.length === 0) {
    throw new CsvSchemaError("figure spec lists no input CSV files", "<inputs>");
  }
  for (const input of spec.inputs) {
    if (!fs.existsSync(input)) {
      throw new CsvSchemaError(`input CSV does not exist: ${input}`, "<inputs>");
    }
  }
  const tables = spec.inputs.map(readCsvFile);
  const groups = groupSeries(tables, spec.kind);
  const keys = [...groups.keys()].sort();
  const families = [...new Set(keys.map((key) => key.split("#")[0]))].sort();
  const title = spec.title ?? DEFAULT_TITLES[spec.kind];

  const allPoints = [...groups.values()].flat();
  const xDomain = padded(extentOf(allPoints.map((p) => p.x)));
  const yDomain = padded(extentOf(allPoints.map((p) => p.y)));

  const figure = new Figure();
  const x = new LinearScale(xDomain, figure.plotX);
  const y = new LinearScale(yDomain, figure.plotY);

  const axisLabels: Record<FigureKind, [string, string]> = {
    ellipses: ["x", "y"],
    trajectory: ["x position", "y position"],
    rmse: ["step", "position RMSE"],
    cost: ["trigger time [s]", "inversions + optimizer iterations"],
  };
  figure.axes(x, y, axisLabels[spec.kind][0], axisLabels[spec.kind][1], title);

  for (const key of keys) {
    const points = groups.get(key)!.map((p) => [p.x, p.y] as [number, number]);
    const color = colorFor(key, families);
    if (spec.kind === "ellipses") {
      figure.polyline(points, x, y, color, 1.2, "", true);
    } else if (spec.kind === "cost") {
      figure.dots(points, x, y, color);
    } else if (spec.kind === "trajectory" && key === "truth") {
      figure.polyline(points, x, y, "#000000", 2.0, "6 3");
    } else {
      figure.polyline(points, x, y, color, key.includes("#") ? 1.0 : 1.6);
    }
  }
  figure.legend(
    families.map((family) => ({
      label: family,
      color: family === "truth" ? "#000000" : PALETTE[families.indexOf(family) % PALETTE.length],
      dash: family === "truth" ? "6 3" : undefined,
    })),
  );

  const svg = figure.render();
  fs.mkdirSync(path.dirname(path.resolve(spec.output)), { recursive: true });
  fs.writeFileSync(spec.output, svg, "utf-8");
  return spec.output;
}

/**
 * Figure assembly: group parsed CSV rows into labelled series.
 *
 * CDF figures plot only finite competitive ratios; "inf" rows carry tail
 * mass, so the curve tops out below 1 and the legend reports the unbounded
 * share instead of drawing a point off the axis.
 */

import { readFileSync, writeFileSync } from "fs";
import {
  CdfRow,
  CurveRow,
  ThresholdRow,
  parseCdf,
  parseCurves,
  parseThresholds,
} from "./csv.js";
import { FigureSpec, Series, renderFigure } from "./svg.js";

export type FigureKind = "cdf" | "pareto" | "thresholds";

export interface PlotJob {
  kind: FigureKind;
  inputs: string[];
  output: string;
  title?: string;
}

function groupBy<T>(rows: T[], key: (row: T) => string): Map<string, T[]> {
  const out = new Map<string, T[]>();
  for (const row of rows) {
    const k = key(row);
    const bucket = out.get(k);
    if (bucket) bucket.push(row);
    else out.set(k, [row]);
  }
  return out;
}

export function buildCdfFigure(rows: CdfRow[], title = "Empirical competitive ratios"): FigureSpec {
  const series: Series[] = [];
  for (const [policy, group] of groupBy(rows, (r) => r.policy)) {
    const finite = group
      .filter((r) => Number.isFinite(r.cr))
      .sort((a, b) => a.cr - b.cr || a.cdf - b.cdf);
    const infMass = group.filter((r) => !Number.isFinite(r.cr)).length > 0
      ? 1 - (finite.length ? Math.max(...finite.map((r) => r.cdf)) : 0)
      : 0;
    const points = finite.map((r): [number, number] => [r.cr, r.cdf]);
    series.push({
      label: policy,
      points,
      step: true,
      note: infMass > 0 ? `(${(infMass * 100).toFixed(0)}% unbounded)` : undefined,
    });
  }
  series.sort((a, b) => (a.label < b.label ? -1 : a.label > b.label ? 1 : 0));
  return {
    title,
    xLabel: "empirical competitive ratio",
    yLabel: "cumulative fraction of instances",
    series,
    yRange: [0, 1],
  };
}

export function buildParetoFigure(rows: CurveRow[], title = "Fairness/competitiveness trade-off"): FigureSpec {
  const sorted = [...rows].sort((a, b) => a.alpha - b.alpha);
  const series: Series[] = [
    {
      label: "Pareto-optimal lower bound",
      points: sorted.map((r): [number, number] => [r.alpha, r.lowerBound]),
    },
    {
      label: "baseline bound",
      points: sorted.map((r): [number, number] => [r.alpha, r.baselineBound]),
    },
    {
      label: "jump threshold, worst observed",
      points: sorted.map((r): [number, number] => [r.alpha, r.ectEmpirical]),
      dashed: true,
    },
  ];
  return {
    title,
    xLabel: "fair interval width",
    yLabel: "competitive ratio",
    series,
  };
}

export function buildThresholdFigure(rows: ThresholdRow[], title = "Admission thresholds"): FigureSpec {
  const series: Series[] = [];
  for (const [policy, group] of groupBy(rows, (r) => r.policy)) {
    const pts = [...group].sort((a, b) => a.z - b.z);
    series.push({ label: policy, points: pts.map((r): [number, number] => [r.z, r.threshold]) });
  }
  series.sort((a, b) => (a.label < b.label ? -1 : a.label > b.label ? 1 : 0));
  return {
    title,
    xLabel: "utilization",
    yLabel: "minimum accepted value density",
    series,
    xRange: [0, 1],
  };
}

export function buildFigure(kind: FigureKind, texts: string[], sources: string[], title?: string): FigureSpec {
  if (kind === "cdf") {
    const rows = texts.flatMap((t, i) => parseCdf(t, sources[i]));
    return buildCdfFigure(rows, title ?? "Empirical competitive ratios");
  }
  if (kind === "pareto") {
    const rows = texts.flatMap((t, i) => parseCurves(t, sources[i]));
    return buildParetoFigure(rows, title ?? "Fairness/competitiveness trade-off");
  }
  const rows = texts.flatMap((t, i) => parseThresholds(t, sources[i]));
  return buildThresholdFigure(rows, title ?? "Admission thresholds");
}

export function render(job: PlotJob): string {
  const texts = job.inputs.map((p) => readFileSync(p, "utf8"));
  const svg = renderFigure(buildFigure(job.kind, texts, job.inputs, job.title));
  writeFileSync(job.output, svg);
  return job.output;
}

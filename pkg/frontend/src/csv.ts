/**
 * Parsers for the harness's CSV schemas. All three are plain comma-separated
 * files without quoting; numeric fields may carry the "inf" sentinel.
 */

export class SchemaError extends Error {
  constructor(
    readonly expected: string[],
    readonly got: string[],
    source: string,
  ) {
    super(
      `schema mismatch in ${source}: expected columns [${expected.join(", ")}], ` +
        `got [${got.join(", ")}]`,
    );
    this.name = "SchemaError";
  }
}

export interface CdfRow {
  policy: string;
  cr: number; // Infinity for the "inf" tail-mass sentinel
  cdf: number;
}

export interface CurveRow {
  alpha: number;
  lowerBound: number;
  baselineBound: number;
  ectEmpirical: number;
}

export interface ThresholdRow {
  policy: string;
  z: number;
  threshold: number;
}

function rows(text: string): string[][] {
  return text
    .split(/\r?\n/)
    .filter((line) => line.trim().length > 0)
    .map((line) => line.split(",").map((c) => c.trim()));
}

function numeric(field: string, source: string): number {
  if (field === "inf") return Infinity;
  const v = Number(field);
  if (!Number.isFinite(v)) {
    throw new Error(`non-numeric field ${JSON.stringify(field)} in ${source}`);
  }
  return v;
}

function checkHeader(all: string[][], expected: string[], source: string): string[][] {
  if (all.length === 0) throw new SchemaError(expected, [], source);
  const header = all[0];
  if (header.length !== expected.length || expected.some((c, i) => header[i] !== c)) {
    throw new SchemaError(expected, header, source);
  }
  return all.slice(1);
}

export function parseCdf(text: string, source = "cdf csv"): CdfRow[] {
  return checkHeader(rows(text), ["policy", "cr", "cdf"], source).map((r) => ({
    policy: r[0],
    cr: numeric(r[1], source),
    cdf: numeric(r[2], source),
  }));
}

export function parseCurves(text: string, source = "curves csv"): CurveRow[] {
  return checkHeader(
    rows(text),
    ["alpha", "lower_bound", "baseline_bound", "ect_empirical"],
    source,
  ).map((r) => ({
    alpha: numeric(r[0], source),
    lowerBound: numeric(r[1], source),
    baselineBound: numeric(r[2], source),
    ectEmpirical: numeric(r[3], source),
  }));
}

export function parseThresholds(text: string, source = "thresholds csv"): ThresholdRow[] {
  return checkHeader(rows(text), ["policy", "z", "threshold"], source).map((r) => ({
    policy: r[0],
    z: numeric(r[1], source),
    threshold: numeric(r[2], source),
  }));
}

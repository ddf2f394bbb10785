#!/usr/bin/env node
/**
 * plots <kind> --in <csv> [--in <csv> ...] --out <file> [--title <text>]
 *
 * kind: cdf | pareto | thresholds. Exits 2 on usage or schema errors, with
 * the offending columns named.
 */

import { realpathSync } from "fs";
import { pathToFileURL } from "url";
import { SchemaError } from "./csv.js";
import { FigureKind, PlotJob, render } from "./figures.js";

const KINDS: FigureKind[] = ["cdf", "pareto", "thresholds"];

export function parseArgs(argv: string[]): PlotJob {
  if (argv.length === 0) {
    throw new Error(`usage: plots <${KINDS.join("|")}> --in <csv> [--in <csv> ...] --out <file>`);
  }
  const kind = argv[0] as FigureKind;
  if (!KINDS.includes(kind)) {
    throw new Error(`unknown figure kind ${JSON.stringify(argv[0])}; expected one of ${KINDS.join(", ")}`);
  }
  const inputs: string[] = [];
  let output: string | undefined;
  let title: string | undefined;
  for (let i = 1; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) throw new Error(`missing value for ${flag}`);
    if (flag === "--in") inputs.push(value);
    else if (flag === "--out") output = value;
    else if (flag === "--title") title = value;
    else throw new Error(`unknown flag ${JSON.stringify(flag)}`);
    i++;
  }
  if (inputs.length === 0) throw new Error("at least one --in <csv> is required");
  if (!output) throw new Error("--out <file> is required");
  return { kind, inputs, output, title };
}

export function main(argv: string[]): number {
  try {
    const job = parseArgs(argv);
    render(job);
    console.log(`wrote ${job.output}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 2;
  }
}

const entry = process.argv[1];
if (entry && import.meta.url === pathToFileURL(realpathSync(entry)).href) {
  process.exit(main(process.argv.slice(2)));
}

#!/usr/bin/env node
/**
 * raceline-plot --run <dir> --out <dir> [--fig overhead|deviation|profiles|laptimes]
 *
 * Renders SVG figures from a raceline run directory. Without --fig all four
 * figures are written; --fig may repeat. Output filenames are fixed per
 * figure name.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { loadRun } from "./artifacts.js";
import { FIGURES, FigureName, renderFigure } from "./figures.js";

interface Args {
  run: string;
  out: string;
  figs: FigureName[];
}

export function parseArgs(argv: string[]): Args {
  let run: string | undefined;
  let out: string | undefined;
  const figs: FigureName[] = [];
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--run") run = argv[++i];
    else if (a === "--out") out = argv[++i];
    else if (a === "--fig") {
      const f = argv[++i] as FigureName;
      if (!FIGURES.includes(f)) {
        throw new Error(`unknown figure ${f}; choose from ${FIGURES.join(", ")}`);
      }
      figs.push(f);
    } else if (a === "--help" || a === "-h") {
      throw new Error(
        "usage: raceline-plot --run <dir> --out <dir> " +
        "[--fig overhead|deviation|profiles|laptimes]");
    } else {
      throw new Error(`unknown argument ${a}`);
    }
  }
  if (!run || !out) throw new Error("--run and --out are required");
  return { run, out, figs: figs.length ? figs : [...FIGURES] };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  try {
    const run = loadRun(args.run);
    mkdirSync(args.out, { recursive: true });
    for (const fig of args.figs) {
      const file = join(args.out, `${fig}.svg`);
      writeFileSync(file, renderFigure(fig, run));
      console.log(`wrote ${file}`);
    }
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  return 0;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("raceline-plot")) {
  process.exit(main(process.argv.slice(2)));
}

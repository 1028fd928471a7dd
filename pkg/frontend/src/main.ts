#!/usr/bin/env node
/**
 * CLI: render --kind K --in CSV --out IMG [--dump] [--title T]
 *             [--x-label L] [--y-label L] [--z-label L]
 *
 * Kinds: contraction_surface (fig1.csv), bound_curve (fig2.csv),
 * gamma_surface (fig3.csv). --dump echoes the plotted arrays verbatim to
 * stdout; with --dump alone no image is written.
 */

import { parseArgs } from "node:util";

import { CsvError } from "./csv.js";
import { FigureKind, FigureSpec, REQUIRED_COLUMNS, dumpToString, renderToFile } from "./render.js";

const USAGE =
  "usage: render --kind {contraction_surface|bound_curve|gamma_surface} --in CSV [--out IMG] [--dump] " +
  "[--title T] [--x-label L] [--y-label L] [--z-label L]";

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        kind: { type: "string" },
        in: { type: "string" },
        out: { type: "string" },
        dump: { type: "boolean", default: false },
        title: { type: "string" },
        "x-label": { type: "string" },
        "y-label": { type: "string" },
        "z-label": { type: "string" },
      },
      allowPositionals: false,
    });
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n${USAGE}\n`);
    return 2;
  }
  const { values } = parsed;
  const kind = values.kind as string | undefined;
  if (!kind || !(kind in REQUIRED_COLUMNS)) {
    process.stderr.write(`--kind must be one of ${Object.keys(REQUIRED_COLUMNS).join(", ")}\n${USAGE}\n`);
    return 2;
  }
  if (!values.in) {
    process.stderr.write(`--in CSV is required\n${USAGE}\n`);
    return 2;
  }
  if (!values.out && !values.dump) {
    process.stderr.write(`--out IMG is required unless --dump is given\n${USAGE}\n`);
    return 2;
  }

  const spec: FigureSpec = {
    inputCsv: values.in,
    figureKind: kind as FigureKind,
    outputPath: values.out ?? "",
    title: values.title,
    xLabel: values["x-label"],
    yLabel: values["y-label"],
    zLabel: values["z-label"],
  };
  try {
    if (values.dump) {
      process.stdout.write(dumpToString(spec));
    }
    if (values.out) {
      renderToFile(spec);
      process.stderr.write(`wrote ${values.out}\n`);
    }
    return 0;
  } catch (err) {
    if (err instanceof CsvError) {
      process.stderr.write(`invalid input: ${err.message}\n`);
    } else {
      process.stderr.write(`${(err as Error).message}\n`);
    }
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));

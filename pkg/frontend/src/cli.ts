#!/usr/bin/env node
/** Figure renderer for study CSVs: validates, draws, writes SVG. */

import * as fs from "fs";
import * as path from "path";
import yargs from "yargs";

import { loadErrors, loadRates, loadSingular } from "./csv";
import { Kind, renderSvg } from "./render";
import { Curve, SchemaError } from "./schemas";

const KINDS: Kind[] = ["singular", "projerr", "romerr", "rates"];

function loadCurves(kind: Kind, files: string[]): Curve[] {
  switch (kind) {
    case "singular":
      return loadSingular(files);
    case "projerr":
    case "romerr":
      return loadErrors(files);
    case "rates":
      return loadRates(files);
  }
}

/** Write via a temp file + rename so failures leave no partial file. */
function writeAtomic(outPath: string, data: string) {
  const dir = path.dirname(outPath);
  fs.mkdirSync(dir, { recursive: true });
  const tmp = path.join(dir, `.${path.basename(outPath)}.tmp-${process.pid}`);
  try {
    fs.writeFileSync(tmp, data);
    fs.renameSync(tmp, outPath);
  } catch (err) {
    fs.rmSync(tmp, { force: true });
    throw err;
  }
}

export function runPlot(kind: Kind, files: string[], out: string): void {
  const curves = loadCurves(kind, files);
  const svg = renderSvg(kind, curves);
  writeAtomic(out, svg);
}

export async function main(argv: string[]): Promise<number> {
  let failed = false;
  const parser = yargs(argv)
    .scriptName("podns-plot")
    .command(
      "plot",
      "render a figure from study CSVs",
      (y) =>
        y
          .option("kind", {
            choices: KINDS,
            demandOption: true,
            describe: "figure kind",
          })
          .option("in", {
            type: "string",
            array: true,
            demandOption: true,
            describe: "input CSV file(s)",
          })
          .option("out", {
            type: "string",
            demandOption: true,
            describe: "output SVG path",
          }),
      (args) => {
        try {
          runPlot(args.kind as Kind, args.in as string[], args.out as string);
          console.log(`wrote ${args.out}`);
        } catch (err) {
          failed = true;
          if (err instanceof SchemaError) {
            console.error(`error: ${err.message}`);
          } else {
            console.error(`error: ${(err as Error).message}`);
          }
        }
      },
    )
    .demandCommand(1, "specify a command (plot)")
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      failed = true;
      console.error(`error: ${msg ?? err?.message}`);
    });
  await parser.parseAsync();
  return failed ? 1 : 0;
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}

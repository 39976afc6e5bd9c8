#!/usr/bin/env node
/** Command line for the synthetic generator and dump inspection. */

import { pathToFileURL } from "node:url";
import { argv, exit } from "node:process";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { readDump, totalDim, writeDump } from "./gdmp.js";
import { synthDump } from "./synth.js";

function runtime(fn: () => void): void {
  try {
    fn();
  } catch (err) {
    console.error(`gradexport: ${err instanceof Error ? err.message : String(err)}`);
    exit(2);
  }
}

function parseDims(raw: string): number[] {
  return raw.split(",").map((part) => Number.parseInt(part.trim(), 10));
}

export function main(args: string[]): void {
  void yargs(args)
    .scriptName("gradexport")
    .strict()
    .demandCommand(1, "pick a command")
    .command(
      "synth",
      "write a synthetic Gaussian gradient dump",
      (y) =>
        y
          .option("out", { type: "string", demandOption: true, describe: "output GDMP path" })
          .option("n-train", { type: "number", default: 40, describe: "train rows" })
          .option("n-test", { type: "number", default: 16, describe: "test rows" })
          .option("dims", { type: "string", default: "12", describe: "comma-separated layer dims" })
          .option("seed", { type: "number", default: 0 })
          .option("outlier", { type: "number", describe: "train row index for a planted outlier" }),
      (parsed) =>
        runtime(() => {
          const { dump, warnings } = synthDump({
            nTrain: parsed.nTrain,
            nTest: parsed.nTest,
            dims: parseDims(parsed.dims),
            seed: parsed.seed,
            plantedOutlier: parsed.outlier,
          });
          for (const warning of warnings) {
            console.error(`warning: ${warning}`);
          }
          writeDump(dump, parsed.out);
          console.log(
            `wrote ${parsed.out}: ${dump.trainRows.length} train, ` +
              `${dump.testRows.length} test, dims [${dump.layerDims.join(", ")}]`,
          );
        }),
    )
    .command(
      "inspect <file>",
      "print a dump's header",
      (y) => y.positional("file", { type: "string", demandOption: true }),
      (parsed) =>
        runtime(() => {
          const dump = readDump(parsed.file);
          const ids = dump.trainIds;
          const shown = ids.slice(0, 5).join(", ");
          const suffix = ids.length > 5 ? ` (+${ids.length - 5} more)` : "";
          console.log(`train rows: ${dump.trainRows.length}`);
          console.log(`test rows: ${dump.testRows.length}`);
          console.log(`layer dims: ${dump.layerDims.join(", ")}`);
          console.log(`total dim: ${totalDim(dump)}`);
          console.log(`train ids: ${shown}${suffix}`);
        }),
    )
    .parse();
}

if (argv[1] && import.meta.url === pathToFileURL(argv[1]).href) {
  main(hideBin(argv));
}

#!/usr/bin/env node
import { writeFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { figureIds, renderFigure } from "./render.js";

const USAGE = `usage: render <figure-id> <input-dir> <output-path> [--band N]
figure ids: ${figureIds.join(", ")}`;

export function main(argv: string[]): number {
  const positional: string[] = [];
  let band = 5;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--band") {
      const raw = argv[++i];
      band = Number(raw);
      if (raw === undefined || !Number.isFinite(band) || band <= 0) {
        console.error(`render: --band expects a positive number, got "${raw ?? ""}"`);
        return 2;
      }
    } else if (arg.startsWith("-")) {
      console.error(`render: unknown option "${arg}"\n${USAGE}`);
      return 2;
    } else {
      positional.push(arg);
    }
  }
  if (positional.length !== 3) {
    console.error(USAGE);
    return 2;
  }
  const [figureId, inputDir, outputPath] = positional;

  let svg: string;
  try {
    svg = renderFigure(figureId, inputDir, band);
  } catch (error) {
    console.error(`render: ${error instanceof Error ? error.message : String(error)}`);
    return 1;
  }
  writeFileSync(outputPath, svg);
  console.log(`wrote ${outputPath}`);
  return 0;
}

if (process.argv[1] && fileURLToPath(import.meta.url) === process.argv[1]) {
  process.exit(main(process.argv.slice(2)));
}

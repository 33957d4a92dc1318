/**
 * Orchestration: discover experiment outputs, route each figure to a suitable
 * experiment, validate everything up front, then write the SVGs.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { Experiment, discoverExperiments } from "./schema.js";
import { FIGURES, Figure, pickExperiment, requireColumns } from "./figures.js";

interface Job {
  figure: Figure;
  exp: Experiment;
}

/**
 * Render every figure from the experiments under inputDir into outputDir.
 *
 * All schema checks run before the first file is written, so a bad input
 * leaves the output directory untouched. Returns the written paths.
 */
export function renderAll(inputDir: string, outputDir: string): string[] {
  const experiments = discoverExperiments(inputDir);

  // validate first, write second
  const jobs: Job[] = FIGURES.map((figure) => {
    const exp = pickExperiment(figure, experiments);
    requireColumns(figure, exp);
    return { figure, exp };
  });
  const rendered = jobs.map((job) => ({
    file: `${job.figure.id}.svg`,
    svg: job.figure.render(job.exp),
  }));

  fs.mkdirSync(outputDir, { recursive: true });
  const written: string[] = [];
  for (const r of rendered) {
    const out = path.join(outputDir, r.file);
    fs.writeFileSync(out, r.svg);
    written.push(out);
  }
  return written;
}

export function runCli(argv: string[]): number {
  if (argv.length !== 2) {
    process.stderr.write("usage: render_all <input_dir> <output_dir>\n");
    return 1;
  }
  const [inputDir, outputDir] = argv;
  try {
    const written = renderAll(inputDir as string, outputDir as string);
    for (const p of written) {
      process.stdout.write(`wrote ${p}\n`);
    }
    return 0;
  } catch (e) {
    const err = e as Error;
    process.stderr.write(`error: ${err.name}: ${err.message}\n`);
    return 1;
  }
}

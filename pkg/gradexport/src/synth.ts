/**
 * Synthetic gradient dumps for exercising influence scorers without a
 * training loop: seeded Gaussian rows, optionally with one train row
 * rescaled into an unambiguous top-influence outlier.
 */

import { EXACT_DIM_GUARD, GradientDump, totalDim } from "./gdmp.js";
import { GaussianStream } from "./rng.js";

export const OUTLIER_ID = "outlier";
export const OUTLIER_NORM_FACTOR = 10;

export interface SynthOptions {
  nTrain: number;
  nTest: number;
  dims: number[];
  seed: number;
  /** train row index to replace with the planted outlier */
  plantedOutlier?: number;
}

export interface SynthResult {
  dump: GradientDump;
  warnings: string[];
}

function norm(row: Float32Array): number {
  let sum = 0;
  for (const value of row) {
    sum += value * value;
  }
  return Math.sqrt(sum);
}

function median(values: number[]): number {
  const sorted = [...values].sort((a, b) => a - b);
  const mid = Math.floor(sorted.length / 2);
  return sorted.length % 2 === 1 ? sorted[mid]! : (sorted[mid - 1]! + sorted[mid]!) / 2;
}

/**
 * The outlier row points along the mean test gradient with 10x the median
 * train row norm, so its dot products dominate every influence formula.
 */
function plantOutlier(trainRows: Float32Array[], testRows: Float32Array[], index: number): void {
  const width = trainRows[0]!.length;
  const mean = new Float64Array(width);
  for (const row of testRows) {
    for (let i = 0; i < width; i++) {
      mean[i]! += row[i]!;
    }
  }
  for (let i = 0; i < width; i++) {
    mean[i]! /= testRows.length;
  }
  let meanNorm = 0;
  for (const value of mean) {
    meanNorm += value * value;
  }
  meanNorm = Math.sqrt(meanNorm);
  const scale = (OUTLIER_NORM_FACTOR * median(trainRows.map(norm))) / meanNorm;
  const planted = new Float32Array(width);
  for (let i = 0; i < width; i++) {
    planted[i] = mean[i]! * scale;
  }
  trainRows[index] = planted;
}

export function synthDump(options: SynthOptions): SynthResult {
  const { nTrain, nTest, dims, seed, plantedOutlier } = options;
  if (!Number.isInteger(nTrain) || nTrain < 1) {
    throw new RangeError(`nTrain must be a positive integer, got ${nTrain}`);
  }
  if (!Number.isInteger(nTest) || nTest < 1) {
    throw new RangeError(`nTest must be a positive integer, got ${nTest}`);
  }
  if (dims.length === 0 || dims.some((d) => !Number.isInteger(d) || d < 1)) {
    throw new RangeError(`dims must be positive integers, got [${dims.join(", ")}]`);
  }
  if (plantedOutlier !== undefined && (plantedOutlier < 0 || plantedOutlier >= nTrain)) {
    throw new RangeError(`plantedOutlier index ${plantedOutlier} outside 0..${nTrain - 1}`);
  }

  const width = totalDim({ layerDims: dims });
  const warnings: string[] = [];
  if (width > EXACT_DIM_GUARD) {
    warnings.push(
      `total dimension ${width} exceeds ${EXACT_DIM_GUARD}; ` +
        "the exact influence oracle will refuse this dump",
    );
  }

  const stream = new GaussianStream(seed);
  const trainRows: Float32Array[] = [];
  for (let i = 0; i < nTrain; i++) {
    trainRows.push(stream.fill(width));
  }
  const testRows: Float32Array[] = [];
  for (let i = 0; i < nTest; i++) {
    testRows.push(stream.fill(width));
  }
  const pad = String(nTrain - 1).length;
  const trainIds = trainRows.map((_, i) => `row-${String(i).padStart(pad, "0")}`);
  if (plantedOutlier !== undefined) {
    plantOutlier(trainRows, testRows, plantedOutlier);
    trainIds[plantedOutlier] = OUTLIER_ID;
  }
  return { dump: { layerDims: [...dims], trainIds, trainRows, testRows }, warnings };
}

export {
  BadMagicError,
  DumpError,
  EXACT_DIM_GUARD,
  MAGIC,
  NonFiniteDumpError,
  TruncatedDumpError,
  VERSION,
  decodeDump,
  encodeDump,
  readDump,
  totalDim,
  validateDump,
  writeDump,
} from "./gdmp.js";
export type { GradientDump } from "./gdmp.js";
export {
  CaptureError,
  ShapeDriftError,
  exportGradients,
} from "./capture.js";
export type { ExportSpec, GradientSource, GroupGradients } from "./capture.js";
export { OUTLIER_ID, OUTLIER_NORM_FACTOR, synthDump } from "./synth.js";
export type { SynthOptions, SynthResult } from "./synth.js";
export { GaussianStream, SplitMix64 } from "./rng.js";

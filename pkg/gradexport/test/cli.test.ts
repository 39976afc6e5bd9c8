/** Spawns the built CLI (dist/cli.js); `npm test` builds it first. */

import { spawnSync } from "node:child_process";
import { existsSync, mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, describe, expect, it } from "vitest";

import { readDump } from "../src/gdmp";

const CLI = fileURLToPath(new URL("../dist/cli.js", import.meta.url));
const workDir = mkdtempSync(join(tmpdir(), "cli-"));
afterAll(() => rmSync(workDir, { recursive: true, force: true }));

interface RunResult {
  code: number;
  stdout: string;
  stderr: string;
}

function run(...args: string[]): RunResult {
  const result = spawnSync("node", [CLI, ...args], { encoding: "utf8" });
  return { code: result.status ?? -1, stdout: result.stdout, stderr: result.stderr };
}

describe("synth command", () => {
  it("writes the requested dump", () => {
    const out = join(workDir, "synth.gdmp");
    const result = run(
      "synth", "--out", out, "--n-train", "6", "--n-test", "2",
      "--dims", "4,2", "--seed", "11",
    );
    expect(result.code).toBe(0);
    expect(result.stdout).toContain("6 train, 2 test, dims [4, 2]");
    const dump = readDump(out);
    expect(dump.trainRows).toHaveLength(6);
    expect(dump.layerDims).toEqual([4, 2]);
  });

  it("is reproducible for a fixed seed", () => {
    const a = join(workDir, "a.gdmp");
    const b = join(workDir, "b.gdmp");
    run("synth", "--out", a, "--seed", "3");
    run("synth", "--out", b, "--seed", "3");
    expect(readDump(a)).toEqual(readDump(b));
  });

  it("labels the outlier row", () => {
    const out = join(workDir, "outlier.gdmp");
    run("synth", "--out", out, "--outlier", "0", "--seed", "1");
    expect(readDump(out).trainIds[0]).toBe("outlier");
  });

  it("warns on stderr past the exact-oracle dimension guard", () => {
    const out = join(workDir, "wide.gdmp");
    const result = run("synth", "--out", out, "--dims", "700", "--seed", "0");
    expect(result.code).toBe(0);
    expect(result.stderr).toContain("exceeds 512");
    expect(existsSync(out)).toBe(true);
  });

  it("reports bad options as runtime errors", () => {
    const result = run("synth", "--out", join(workDir, "x.gdmp"), "--n-train", "0");
    expect(result.code).toBe(2);
    expect(result.stderr).toContain("gradexport:");
  });

  it("requires --out", () => {
    const result = run("synth");
    expect(result.code).toBe(1);
  });
});

describe("inspect command", () => {
  it("prints the header", () => {
    const out = join(workDir, "inspectable.gdmp");
    run("synth", "--out", out, "--n-train", "3", "--n-test", "1", "--dims", "5");
    const result = run("inspect", out);
    expect(result.code).toBe(0);
    expect(result.stdout).toContain("train rows: 3");
    expect(result.stdout).toContain("total dim: 5");
    expect(result.stdout).toContain("row-0");
  });

  it("fails with exit 2 on a missing file", () => {
    const result = run("inspect", join(workDir, "missing.gdmp"));
    expect(result.code).toBe(2);
    expect(result.stderr).toContain("gradexport:");
  });

  it("fails with exit 1 without a command", () => {
    expect(run().code).toBe(1);
  });
});

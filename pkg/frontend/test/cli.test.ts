import assert from "node:assert/strict";
import { existsSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";

import { main, parseArgs } from "../src/cli.js";

const RUN_DIR = join(import.meta.dirname, "..", "..", "testdata", "run");

test("parseArgs defaults to all figures", () => {
  const args = parseArgs(["--run", "r", "--out", "o"]);
  assert.equal(args.figs.length, 4);
});

test("parseArgs rejects unknown figure", () => {
  assert.throws(() => parseArgs(["--run", "r", "--out", "o", "--fig", "pie"]),
                /unknown figure/);
});

test("cli writes selected figures", () => {
  const out = mkdtempSync(join(tmpdir(), "raceline-plot-"));
  const rc = main(["--run", RUN_DIR, "--out", out, "--fig", "overhead",
                   "--fig", "laptimes"]);
  assert.equal(rc, 0);
  assert.ok(existsSync(join(out, "overhead.svg")));
  assert.ok(existsSync(join(out, "laptimes.svg")));
  assert.ok(!existsSync(join(out, "deviation.svg")));
  const svg = readFileSync(join(out, "overhead.svg"), "utf8");
  assert.ok(svg.includes("racing-line"));
});

test("cli writes all four by default", () => {
  const out = mkdtempSync(join(tmpdir(), "raceline-plot-"));
  const rc = main(["--run", RUN_DIR, "--out", out]);
  assert.equal(rc, 0);
  for (const fig of ["overhead", "deviation", "profiles", "laptimes"]) {
    assert.ok(existsSync(join(out, `${fig}.svg`)), fig);
  }
});

test("cli fails cleanly on a missing run directory", () => {
  const out = mkdtempSync(join(tmpdir(), "raceline-plot-"));
  const rc = main(["--run", "/missing/run", "--out", out]);
  assert.equal(rc, 1);
});

test("cli fails on usage errors", () => {
  assert.equal(main(["--run", RUN_DIR]), 2);
});

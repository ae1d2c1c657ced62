import assert from "node:assert/strict";
import { test } from "node:test";

import { parseCsv } from "../src/csv.js";

test("parses numeric columns", () => {
  const t = parseCsv("a,b\n1.5,2\n-0.25,4\n");
  assert.deepEqual(t.header, ["a", "b"]);
  assert.deepEqual(t.columns.get("a"), [1.5, -0.25]);
  assert.deepEqual(t.columns.get("b"), [2, 4]);
  assert.equal(t.rows, 2);
});

test("rejects ragged rows", () => {
  assert.throws(() => parseCsv("a,b\n1\n"), /expected 2/);
});

test("rejects non-numeric cells", () => {
  assert.throws(() => parseCsv("a,b\n1,x\n"), /not a number/);
});

test("rejects empty input", () => {
  assert.throws(() => parseCsv("a,b\n"), /data row/);
});

test("keeps full float precision", () => {
  const value = "4.963955786613269";
  const t = parseCsv(`v\n${value}\n`);
  assert.equal(String(t.columns.get("v")![0]), value);
});

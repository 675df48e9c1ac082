import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import { parseLinkConfig, parseRateToken } from "../src/config";
import { formatIPv4 } from "../src/wire";

/**
 * The agent emits the config grammar this package consumes; when the
 * agent CLI is installed, feed its mesh output straight into our
 * parser and check both sides agree on every field.
 */

const hasAgent = spawnSync("edtemu", ["--help"]).status === 0;

function mesh(args: string[]): string {
  const result = spawnSync("edtemu", ["mesh", ...args], { encoding: "utf8" });
  expect(result.status).toBe(0);
  return result.stdout;
}

describe.skipIf(!hasAgent)("agent grammar parity", () => {
  it("parses a shaped mesh with the agent's own values", () => {
    const specs = parseLinkConfig(mesh(["--n", "8", "--rate", "100Mbit", "--delay", "5ms"]));
    expect(specs).toHaveLength(8 * 7);
    for (const spec of specs) {
      expect(spec.rate).toBe(12_500_000n);
      expect(spec.latency).toBe(5_000_000n);
      expect(spec.src).not.toBe(spec.dst);
    }
    // directed pairs are unique
    const pairs = new Set(specs.map((s) => `${s.src}>${s.dst}`));
    expect(pairs.size).toBe(specs.length);
  });

  it("agrees on fractional and single-parameter tokens", () => {
    const rated = parseLinkConfig(mesh(["--n", "3", "--rate", "2.5Mbit"]));
    expect(rated.every((s) => s.rate === 312_500n && s.latency === null)).toBe(true);

    const delayed = parseLinkConfig(mesh(["--n", "3", "--delay", "1500us"]));
    expect(delayed.every((s) => s.rate === null && s.latency === 1_500_000n)).toBe(true);
  });

  it("agrees with the agent's loader on entry counts", () => {
    const text = mesh(["--n", "6", "--delay", "1ms"]);
    const file = path.join(mkdtempSync(path.join(tmpdir(), "edtcfg-")), "mesh.cfg");
    try {
      writeFileSync(file, text);
      const load = spawnSync("edtemu", ["load", file], { encoding: "utf8" });
      expect(load.status).toBe(0);
      const agentCount = Number(/loaded (\d+) entries/.exec(load.stdout)![1]);

      // same dst-keyed collapse rule as our map loader
      const dsts = new Set(parseLinkConfig(text).map((s) => s.dst));
      expect(dsts.size).toBe(agentCount);
    } finally {
      rmSync(path.dirname(file), { recursive: true, force: true });
    }
  });

  it("round-trips every address the agent emits", () => {
    for (const spec of parseLinkConfig(mesh(["--n", "12", "--delay", "1ms"]))) {
      expect(() => formatIPv4(spec.src)).not.toThrow();
      expect(() => formatIPv4(spec.dst)).not.toThrow();
    }
    expect(parseRateToken("100Mbit")).toBe(12_500_000n);
  });
});

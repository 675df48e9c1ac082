import { describe, expect, it } from "vitest";

import { LinkSpec } from "../src/config";
import { loadConfig, lookupEntry, removeEntry, updateEntry } from "../src/maps";
import { PARAMS_PIN } from "../src/tc";
import { MAP_CAPACITY } from "../src/wire";
import { FakeRunner } from "./fake-runner";

const PARAMS = { rate: 12_500_000n, latency: 5_000_000n };
const PARAMS_HEX = [
  "20", "bc", "be", "00", "00", "00", "00", "00",
  "40", "4b", "4c", "00", "00", "00", "00", "00",
];

describe("updateEntry", () => {
  it("issues a bpftool update with hex key and value", async () => {
    const runner = new FakeRunner();
    await updateEntry("10.0.0.1", PARAMS, { runner });
    expect(runner.calls).toEqual([
      [
        "bpftool", "map", "update", "pinned", PARAMS_PIN,
        "key", "hex", "0a", "00", "00", "01",
        "value", "hex", ...PARAMS_HEX,
        "any",
      ],
    ]);
  });

  it("surfaces bpftool failures", async () => {
    const runner = new FakeRunner().on(["bpftool", "map", "update"], {
      code: 255,
      stderr: "Error: map update failed: Argument list too long",
    });
    await expect(updateEntry("10.0.0.1", PARAMS, { runner })).rejects.toThrow(/update failed/);
  });
});

describe("removeEntry", () => {
  it("issues a bpftool delete for the key", async () => {
    const runner = new FakeRunner();
    await removeEntry("10.0.0.1", { runner });
    expect(runner.calls).toEqual([
      ["bpftool", "map", "delete", "pinned", PARAMS_PIN, "key", "hex", "0a", "00", "00", "01"],
    ]);
  });
});

describe("lookupEntry", () => {
  it("decodes hex-string byte arrays", async () => {
    const value = PARAMS_HEX.map((b) => `0x${b}`);
    const runner = new FakeRunner().on(["bpftool", "-j", "map", "lookup"], {
      stdout: JSON.stringify({ key: ["0x0a", "0x00", "0x00", "0x01"], value }),
    });
    expect(await lookupEntry("10.0.0.1", { runner })).toEqual(PARAMS);
  });

  it("decodes integer byte arrays", async () => {
    const value = PARAMS_HEX.map((b) => parseInt(b, 16));
    const runner = new FakeRunner().on(["bpftool", "-j", "map", "lookup"], {
      stdout: JSON.stringify({ value }),
    });
    expect(await lookupEntry("10.0.0.1", { runner })).toEqual(PARAMS);
  });

  it("returns null for a missing key", async () => {
    const runner = new FakeRunner().on(["bpftool", "-j", "map", "lookup"], {
      code: 255,
      stderr: "Error: key not found",
    });
    expect(await lookupEntry("10.0.0.1", { runner })).toBeNull();
  });

  it("throws on other failures", async () => {
    const runner = new FakeRunner().on(["bpftool", "-j", "map", "lookup"], {
      code: 255,
      stderr: "Error: bpf obj get (/sys/fs/bpf/edtemu/emu_params): Permission denied",
    });
    await expect(lookupEntry("10.0.0.1", { runner })).rejects.toThrow(/Permission denied/);
  });
});

describe("loadConfig", () => {
  const spec = (src: number, dst: number, rate: bigint | null, latency: bigint | null): LinkSpec => ({
    src,
    dst,
    rate,
    latency,
  });

  it("collapses to one update per destination, last line winning", async () => {
    const runner = new FakeRunner();
    const report = await loadConfig(
      [
        spec(1, 0x0a000002, 1_000n, null),
        spec(2, 0x0a000003, null, 7n),
        spec(3, 0x0a000002, 2_000n, 9n), // overwrites the first
      ],
      { runner },
    );
    expect(report.entryCount).toBe(2);
    expect(runner.calls).toHaveLength(2);
    const forDst2 = runner.calls.find((argv) => argv.join(" ").includes("0a 00 00 02"))!;
    // value bytes carry rate=2000 (0x7d0) and latency=9 from the last line
    expect(forDst2.slice(-17, -9)).toEqual(["d0", "07", "00", "00", "00", "00", "00", "00"]);
    expect(forDst2.slice(-9, -1)).toEqual(["09", "00", "00", "00", "00", "00", "00", "00"]);
  });

  it("writes unset fields as zero", async () => {
    const runner = new FakeRunner();
    await loadConfig([spec(1, 2, null, 5n)], { runner });
    const value = runner.calls[0].slice(-17, -1);
    expect(value).toEqual([
      "00", "00", "00", "00", "00", "00", "00", "00",
      "05", "00", "00", "00", "00", "00", "00", "00",
    ]);
  });

  it("rejects oversized documents before writing anything", async () => {
    const runner = new FakeRunner();
    const specs = Array.from({ length: MAP_CAPACITY + 1 }, (_, i) => spec(1, i, null, 1n));
    await expect(loadConfig(specs, { runner })).rejects.toThrow(/exceed map capacity/);
    expect(runner.calls).toHaveLength(0);
  });

  it("stops at the first failed write", async () => {
    const runner = new FakeRunner().on(["bpftool", "map", "update"], { code: 255, stderr: "E2BIG" });
    await expect(loadConfig([spec(1, 2, null, 1n), spec(1, 3, null, 1n)], { runner })).rejects.toThrow();
    expect(runner.calls).toHaveLength(1);
  });
});

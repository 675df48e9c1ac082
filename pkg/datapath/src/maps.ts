/**
 * Read and write the pinned parameter map through bpftool.
 *
 * Entries are keyed by destination address alone, matching what the
 * classifier looks up, so a config document collapses to one entry per
 * destination with the last line winning.
 */

import { LinkSpec } from "./config";
import { CommandError, CommandRunner, PARAMS_PIN } from "./tc";
import {
  MAP_CAPACITY,
  WIRE_PARAMS_SIZE,
  WireLinkParams,
  encodeDstKey,
  encodeParams,
  toHexBytes,
} from "./wire";

export interface LoadReport {
  entryCount: number;
  elapsedMs: number;
}

export interface MapOptions {
  runner: CommandRunner;
  pinPath?: string;
}

export async function updateEntry(
  dst: number | string,
  params: WireLinkParams,
  opts: MapOptions,
): Promise<void> {
  const pin = opts.pinPath ?? PARAMS_PIN;
  const argv = [
    "bpftool", "map", "update", "pinned", pin,
    "key", "hex", ...toHexBytes(encodeDstKey(dst)),
    "value", "hex", ...toHexBytes(encodeParams(params)),
    "any",
  ];
  const result = await opts.runner.run(argv);
  if (result.code !== 0) {
    throw new CommandError(argv, result);
  }
}

export async function removeEntry(dst: number | string, opts: MapOptions): Promise<void> {
  const pin = opts.pinPath ?? PARAMS_PIN;
  const argv = ["bpftool", "map", "delete", "pinned", pin, "key", "hex", ...toHexBytes(encodeDstKey(dst))];
  const result = await opts.runner.run(argv);
  if (result.code !== 0) {
    throw new CommandError(argv, result);
  }
}

/** One byte of bpftool JSON output; versions differ on "0x0a" vs 10. */
function jsonByte(raw: unknown): number {
  const value = typeof raw === "string" ? parseInt(raw, 16) : Number(raw);
  if (!Number.isInteger(value) || value < 0 || value > 0xff) {
    throw new RangeError(`bad byte in bpftool output: ${JSON.stringify(raw)}`);
  }
  return value;
}

/** Returns null when the key has no entry. */
export async function lookupEntry(
  dst: number | string,
  opts: MapOptions,
): Promise<WireLinkParams | null> {
  const pin = opts.pinPath ?? PARAMS_PIN;
  const argv = [
    "bpftool", "-j", "map", "lookup", "pinned", pin,
    "key", "hex", ...toHexBytes(encodeDstKey(dst)),
  ];
  const result = await opts.runner.run(argv);
  if (result.code !== 0) {
    if (/not found|No such/i.test(result.stderr)) {
      return null;
    }
    throw new CommandError(argv, result);
  }
  const parsed = JSON.parse(result.stdout) as { value?: unknown[] };
  if (!Array.isArray(parsed.value) || parsed.value.length !== WIRE_PARAMS_SIZE) {
    throw new RangeError(`expected ${WIRE_PARAMS_SIZE} value bytes from bpftool`);
  }
  const buf = Buffer.from(parsed.value.map(jsonByte));
  return { rate: buf.readBigUInt64LE(0), latency: buf.readBigUInt64LE(8) };
}

/**
 * Write a parsed config into the map, one update per distinct
 * destination. The distinct-key count is checked against the map
 * capacity up front so an oversized document fails before the first
 * write.
 */
export async function loadConfig(specs: LinkSpec[], opts: MapOptions): Promise<LoadReport> {
  const byDst = new Map<number, WireLinkParams>();
  for (const spec of specs) {
    byDst.set(spec.dst, { rate: spec.rate ?? 0n, latency: spec.latency ?? 0n });
  }
  if (byDst.size > MAP_CAPACITY) {
    throw new RangeError(`${byDst.size} entries exceed map capacity ${MAP_CAPACITY}`);
  }
  const start = process.hrtime.bigint();
  for (const [dst, params] of byDst) {
    await updateEntry(dst, params, opts);
  }
  const elapsedMs = Number(process.hrtime.bigint() - start) / 1e6;
  return { entryCount: byDst.size, elapsedMs };
}

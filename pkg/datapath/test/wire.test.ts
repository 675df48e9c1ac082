import { describe, expect, it } from "vitest";

import {
  DST_KEY_SIZE,
  MAP_CAPACITY,
  PAIR_KEY_SIZE,
  WIRE_PARAMS_SIZE,
  decodeDstKey,
  decodePairKey,
  decodeParams,
  encodeDstKey,
  encodePairKey,
  encodeParams,
  formatIPv4,
  parseIPv4,
  toHexBytes,
} from "../src/wire";

/** Deterministic 32-bit PRNG for round-trip sweeps. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("params codec", () => {
  it("lays out rate then latency, little-endian u64", () => {
    const buf = encodeParams({ rate: 12_500_000n, latency: 5_000_000n });
    // 12,500,000 = 0xbebc20; 5,000,000 = 0x4c4b40
    expect(buf.toString("hex")).toBe("20bcbe0000000000404b4c0000000000");
    expect(buf.length).toBe(WIRE_PARAMS_SIZE);
  });

  it("golden bytes for the 100 Mbit + 5 ms entry", () => {
    const buf = encodeParams({ rate: 12_500_000n, latency: 5_000_000n });
    expect(toHexBytes(buf)).toEqual([
      "20", "bc", "be", "00", "00", "00", "00", "00",
      "40", "4b", "4c", "00", "00", "00", "00", "00",
    ]);
  });

  it("zero means unset and survives the round trip", () => {
    const decoded = decodeParams(encodeParams({ rate: 0n, latency: 0n }));
    expect(decoded).toEqual({ rate: 0n, latency: 0n });
  });

  it("covers the full u64 range", () => {
    const max = (1n << 64n) - 1n;
    expect(decodeParams(encodeParams({ rate: max, latency: 1n }))).toEqual({
      rate: max,
      latency: 1n,
    });
  });

  it("rejects out-of-range values", () => {
    expect(() => encodeParams({ rate: -1n, latency: 0n })).toThrow(RangeError);
    expect(() => encodeParams({ rate: 0n, latency: 1n << 64n })).toThrow(RangeError);
  });

  it("rejects the wrong buffer size", () => {
    expect(() => decodeParams(Buffer.alloc(8))).toThrow(/expected 16 bytes/);
  });

  it("round-trips random values", () => {
    const rand = mulberry32(42);
    for (let i = 0; i < 500; i++) {
      const params = {
        rate: BigInt(Math.floor(rand() * 2 ** 53)),
        latency: BigInt(Math.floor(rand() * 2 ** 53)),
      };
      expect(decodeParams(encodeParams(params))).toEqual(params);
    }
  });
});

describe("addresses", () => {
  it("parses dotted quads to host-order integers", () => {
    expect(parseIPv4("10.0.0.1")).toBe(0x0a000001);
    expect(parseIPv4("0.0.0.0")).toBe(0);
    expect(parseIPv4("255.255.255.255")).toBe(0xffffffff);
  });

  it("rejects malformed addresses", () => {
    for (const bad of ["10.0.0", "10.0.0.0.1", "10.0.0.256", "10.0.0.01", "10.0.0.", "a.b.c.d", "10.0.0.1 ", ""]) {
      expect(() => parseIPv4(bad), bad).toThrow(RangeError);
    }
  });

  it("formats back to dotted quad", () => {
    expect(formatIPv4(0x0a000001)).toBe("10.0.0.1");
    expect(formatIPv4(0xffffffff)).toBe("255.255.255.255");
    expect(() => formatIPv4(-1)).toThrow(RangeError);
    expect(() => formatIPv4(2 ** 32)).toThrow(RangeError);
  });

  it("round-trips random addresses", () => {
    const rand = mulberry32(7);
    for (let i = 0; i < 500; i++) {
      const addr = Math.floor(rand() * 2 ** 32);
      expect(parseIPv4(formatIPv4(addr))).toBe(addr);
    }
  });
});

describe("map keys", () => {
  it("dst key is the address in network byte order", () => {
    expect([...encodeDstKey("10.0.0.1")]).toEqual([10, 0, 0, 1]);
    expect([...encodeDstKey(0xc0a80002)]).toEqual([192, 168, 0, 2]);
    expect(encodeDstKey("10.0.0.1").length).toBe(DST_KEY_SIZE);
  });

  it("pair key is source then destination", () => {
    const key = encodePairKey("192.168.0.1", "10.0.0.1");
    expect([...key]).toEqual([192, 168, 0, 1, 10, 0, 0, 1]);
    expect(key.length).toBe(PAIR_KEY_SIZE);
  });

  it("decoders invert the encoders", () => {
    expect(decodeDstKey(encodeDstKey("172.16.5.9"))).toBe("172.16.5.9");
    expect(decodePairKey(encodePairKey("1.2.3.4", "5.6.7.8"))).toEqual({
      src: "1.2.3.4",
      dst: "5.6.7.8",
    });
    expect(() => decodeDstKey(Buffer.alloc(3))).toThrow(RangeError);
    expect(() => decodePairKey(Buffer.alloc(4))).toThrow(RangeError);
  });

  it("hex bytes are zero-padded for bpftool", () => {
    expect(toHexBytes(Buffer.from([0, 10, 255]))).toEqual(["00", "0a", "ff"]);
  });
});

describe("capacity", () => {
  it("matches the agent-side map default", () => {
    expect(MAP_CAPACITY).toBe(131072);
  });
});

/**
 * Byte-level codecs for the records shared with the kernel datapath.
 *
 * The value layout is a bit-exact contract with the classifier's map:
 * two little-endian unsigned 64-bit fields, zero meaning unset. Keys
 * are IPv4 addresses in network byte order, 4 bytes for a destination
 * key or 8 bytes (source then destination) for a pair key.
 */

/** Capacity of both kernel maps; inserts beyond this fail. */
export const MAP_CAPACITY = 131072;

export const WIRE_PARAMS_SIZE = 16;
export const DST_KEY_SIZE = 4;
export const PAIR_KEY_SIZE = 8;

const U64_MAX = (1n << 64n) - 1n;

export interface WireLinkParams {
  /** bytes/second; 0n = no rate limit */
  rate: bigint;
  /** nanoseconds; 0n = no added delay */
  latency: bigint;
}

function checkU64(name: string, value: bigint): void {
  if (value < 0n || value > U64_MAX) {
    throw new RangeError(`${name} out of u64 range: ${value}`);
  }
}

export function encodeParams(params: WireLinkParams): Buffer {
  checkU64("rate", params.rate);
  checkU64("latency", params.latency);
  const buf = Buffer.alloc(WIRE_PARAMS_SIZE);
  buf.writeBigUInt64LE(params.rate, 0);
  buf.writeBigUInt64LE(params.latency, 8);
  return buf;
}

export function decodeParams(buf: Buffer): WireLinkParams {
  if (buf.length !== WIRE_PARAMS_SIZE) {
    throw new RangeError(`expected ${WIRE_PARAMS_SIZE} bytes, got ${buf.length}`);
  }
  return { rate: buf.readBigUInt64LE(0), latency: buf.readBigUInt64LE(8) };
}

/**
 * Dotted-quad IPv4 to a host-order u32. Rejects anything but four
 * decimal octets in 0..255 with no leading zeros, so "10.0.0.01" and
 * shorthand forms are errors rather than silent reinterpretations.
 */
export function parseIPv4(text: string): number {
  const parts = text.split(".");
  if (parts.length !== 4) {
    throw new RangeError(`bad IPv4 address ${JSON.stringify(text)}`);
  }
  let addr = 0;
  for (const part of parts) {
    if (!/^(0|[1-9][0-9]{0,2})$/.test(part)) {
      throw new RangeError(`bad IPv4 address ${JSON.stringify(text)}`);
    }
    const octet = Number(part);
    if (octet > 255) {
      throw new RangeError(`bad IPv4 address ${JSON.stringify(text)}`);
    }
    addr = addr * 256 + octet;
  }
  return addr;
}

export function formatIPv4(addr: number): string {
  if (!Number.isInteger(addr) || addr < 0 || addr > 0xffffffff) {
    throw new RangeError(`address out of u32 range: ${addr}`);
  }
  return [addr >>> 24, (addr >>> 16) & 0xff, (addr >>> 8) & 0xff, addr & 0xff].join(".");
}

/** 4-byte map key: the destination address in network byte order. */
export function encodeDstKey(dst: number | string): Buffer {
  const addr = typeof dst === "string" ? parseIPv4(dst) : dst;
  const buf = Buffer.alloc(DST_KEY_SIZE);
  buf.writeUInt32BE(addr >>> 0, 0);
  return buf;
}

export function decodeDstKey(buf: Buffer): string {
  if (buf.length !== DST_KEY_SIZE) {
    throw new RangeError(`expected ${DST_KEY_SIZE} bytes, got ${buf.length}`);
  }
  return formatIPv4(buf.readUInt32BE(0));
}

/** 8-byte map key: source then destination, both network byte order. */
export function encodePairKey(src: number | string, dst: number | string): Buffer {
  return Buffer.concat([encodeDstKey(src), encodeDstKey(dst)]);
}

export function decodePairKey(buf: Buffer): { src: string; dst: string } {
  if (buf.length !== PAIR_KEY_SIZE) {
    throw new RangeError(`expected ${PAIR_KEY_SIZE} bytes, got ${buf.length}`);
  }
  return { src: decodeDstKey(buf.subarray(0, 4)), dst: decodeDstKey(buf.subarray(4)) };
}

/** Buffer to the space-separated hex bytes bpftool expects. */
export function toHexBytes(buf: Buffer): string[] {
  return Array.from(buf, (b) => b.toString(16).padStart(2, "0"));
}

/**
 * Parser for the link configuration grammar the agent emits.
 *
 * One directed link per line, `#` starts a comment, blank lines are
 * skipped:
 *
 *     10.0.0.1 10.0.0.2 rate=100Mbit delay=5ms
 *
 * Rate units are decimal bits/second (bit, Kbit, Mbit, Gbit), stored
 * as whole bytes/second; delay units are ns/us/ms/s, stored as whole
 * nanoseconds. Fractions are exact: "2.5Mbit" is 312500 bytes/second,
 * and anything that truncates below one byte/second is rejected.
 */

import { parseIPv4 } from "./wire";

export const RATE_UNITS: Record<string, bigint> = {
  bit: 1n,
  Kbit: 1_000n,
  Mbit: 1_000_000n,
  Gbit: 1_000_000_000n,
};

export const DELAY_UNITS: Record<string, bigint> = {
  ns: 1n,
  us: 1_000n,
  ms: 1_000_000n,
  s: 1_000_000_000n,
};

const VALUE_RE = /^(?<number>\d+(?:\.\d+)?)(?<unit>[A-Za-z]+)$/;

export interface LinkSpec {
  src: number;
  dst: number;
  /** bytes/second, null = no rate limit */
  rate: bigint | null;
  /** nanoseconds, null = no added delay */
  latency: bigint | null;
}

export interface ConfigFault {
  line: number;
  reason: string;
}

/** Config document rejected; one (line, reason) pair per fault. */
export class ConfigError extends Error {
  readonly faults: ConfigFault[];

  constructor(faults: ConfigFault[]) {
    super(faults.map((f) => `line ${f.line}: ${f.reason}`).join("; "));
    this.name = "ConfigError";
    this.faults = faults;
  }
}

/** "12.5" -> numerator digits and a power-of-ten denominator. */
function scaledValue(number: string): { digits: bigint; scale: bigint } {
  const dot = number.indexOf(".");
  if (dot === -1) {
    return { digits: BigInt(number), scale: 1n };
  }
  const frac = number.length - dot - 1;
  return { digits: BigInt(number.slice(0, dot) + number.slice(dot + 1)), scale: 10n ** BigInt(frac) };
}

export function parseRateToken(text: string): bigint {
  const m = VALUE_RE.exec(text);
  const unit = m?.groups?.unit;
  if (!m || unit === undefined || !(unit in RATE_UNITS)) {
    throw new RangeError(`bad rate ${JSON.stringify(text)} (expected <number> followed by bit/Kbit/Mbit/Gbit)`);
  }
  const { digits, scale } = scaledValue(m.groups!.number);
  const rate = (digits * RATE_UNITS[unit]) / (8n * scale);
  if (rate <= 0n) {
    throw new RangeError(`rate ${JSON.stringify(text)} is below 1 byte/second`);
  }
  return rate;
}

export function parseDelayToken(text: string): bigint {
  const m = VALUE_RE.exec(text);
  const unit = m?.groups?.unit;
  if (!m || unit === undefined || !(unit in DELAY_UNITS)) {
    throw new RangeError(`bad delay ${JSON.stringify(text)} (expected <number> followed by ns/us/ms/s)`);
  }
  const { digits, scale } = scaledValue(m.groups!.number);
  return (digits * DELAY_UNITS[unit]) / scale;
}

function parseLine(line: string): LinkSpec {
  const tokens = line.split(/\s+/);
  if (tokens.length < 2) {
    throw new RangeError("expected '<src> <dst> [rate=...] [delay=...]'");
  }
  const src = parseIPv4(tokens[0]);
  const dst = parseIPv4(tokens[1]);
  let rate: bigint | null = null;
  let latency: bigint | null = null;
  for (const token of tokens.slice(2)) {
    const eq = token.indexOf("=");
    if (eq === -1) {
      throw new RangeError(`expected key=value, got ${JSON.stringify(token)}`);
    }
    const name = token.slice(0, eq);
    const value = token.slice(eq + 1);
    if (name === "rate") {
      if (rate !== null) throw new RangeError("duplicate rate");
      rate = parseRateToken(value);
    } else if (name === "delay") {
      if (latency !== null) throw new RangeError("duplicate delay");
      latency = parseDelayToken(value);
    } else {
      throw new RangeError(`unknown option ${JSON.stringify(name)}`);
    }
  }
  if (rate === null && latency === null) {
    throw new RangeError("line needs rate= or delay=");
  }
  return { src, dst, rate, latency };
}

/**
 * Parse a whole config document. Every faulty line is collected and
 * reported with its 1-based number in a single ConfigError; nothing is
 * returned unless the whole document is clean.
 */
export function parseLinkConfig(text: string): LinkSpec[] {
  const specs: LinkSpec[] = [];
  const faults: ConfigFault[] = [];
  text.split("\n").forEach((raw, i) => {
    const line = raw.split("#", 1)[0].trim();
    if (!line) return;
    try {
      specs.push(parseLine(line));
    } catch (err) {
      faults.push({ line: i + 1, reason: (err as Error).message });
    }
  });
  if (faults.length) {
    throw new ConfigError(faults);
  }
  return specs;
}

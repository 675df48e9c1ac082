import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import * as path from "node:path";

import { afterAll, describe, expect, it } from "vitest";

const SOURCE = path.join(__dirname, "..", "bpf", "edt_kernel.c");
const EM_BPF = 247;

const hasClang = spawnSync("clang", ["--version"]).status === 0;
const arch = process.arch === "x64" ? "x86_64" : process.arch;

/** Section names from a 64-bit little-endian ELF object. */
function sectionNames(elf: Buffer): string[] {
  const shoff = Number(elf.readBigUInt64LE(0x28));
  const shentsize = elf.readUInt16LE(0x3a);
  const shnum = elf.readUInt16LE(0x3c);
  const shstrndx = elf.readUInt16LE(0x3e);
  const strHdr = shoff + shstrndx * shentsize;
  const strOff = Number(elf.readBigUInt64LE(strHdr + 0x18));
  const strSize = Number(elf.readBigUInt64LE(strHdr + 0x20));
  const strtab = elf.subarray(strOff, strOff + strSize);
  const names: string[] = [];
  for (let i = 0; i < shnum; i++) {
    const nameOff = elf.readUInt32LE(shoff + i * shentsize);
    names.push(strtab.subarray(nameOff, strtab.indexOf(0, nameOff)).toString());
  }
  return names;
}

describe.skipIf(!hasClang)("classifier object", () => {
  const dir = mkdtempSync(path.join(tmpdir(), "edtobj-"));
  const objPath = path.join(dir, "edt_kernel.o");

  afterAll(() => rmSync(dir, { recursive: true, force: true }));

  it("compiles for the BPF target without warnings", () => {
    const result = spawnSync(
      "clang",
      [
        "-O2", "-g", "-Wall", "-Werror", "-target", "bpf",
        `-I/usr/include/${arch}-linux-gnu`,
        "-c", SOURCE, "-o", objPath,
      ],
      { encoding: "utf8" },
    );
    expect(result.stderr).toBe("");
    expect(result.status).toBe(0);
  });

  it("carries the sections the loader needs", () => {
    const elf = readFileSync(objPath);
    expect(elf.subarray(0, 4)).toEqual(Buffer.from([0x7f, 0x45, 0x4c, 0x46])); // \x7fELF
    expect(elf.readUInt16LE(18)).toBe(EM_BPF);
    expect(sectionNames(elf)).toEqual(
      expect.arrayContaining(["tc", ".maps", "license", ".BTF"]),
    );
  });
});

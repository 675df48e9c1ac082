/**
 * Attach and detach the egress classifier on a network device.
 *
 * All system interaction goes through a CommandRunner so the exact
 * command sequences are unit-testable without root or a kernel; the
 * real runner shells out to ip/tc/bpftool.
 *
 * Attachment installs three things: a clsact qdisc carrying the
 * classifier on egress, an FQ root qdisc (the packet scheduler that
 * honors the departure timestamps the classifier writes), and the two
 * program maps pinned under PIN_DIR so the agent can address them by
 * path. The pin directory doubles as the attachment lock: a second
 * attach fails before touching anything, and detach removes it last.
 *
 * Detach assumes the device ran the kernel default root qdisc before
 * attach; it deletes the FQ root rather than saving and restoring a
 * custom one.
 */

import { execFile } from "node:child_process";
import * as path from "node:path";

export interface CommandResult {
  code: number;
  stdout: string;
  stderr: string;
}

export interface CommandRunner {
  run(argv: string[]): Promise<CommandResult>;
}

/** A command exited nonzero (or could not be spawned at all). */
export class CommandError extends Error {
  constructor(readonly argv: string[], readonly result: CommandResult) {
    const detail = result.stderr.trim() || result.stdout.trim() || `exit ${result.code}`;
    super(`${argv.join(" ")}: ${detail}`);
    this.name = "CommandError";
  }
}

/** Runs commands for real; nonzero exits are reported, not thrown. */
export class ExecRunner implements CommandRunner {
  run(argv: string[]): Promise<CommandResult> {
    return new Promise((resolve) => {
      execFile(argv[0], argv.slice(1), { encoding: "utf8" }, (err, stdout, stderr) => {
        let code = 0;
        if (err) {
          const spawnErr = err as NodeJS.ErrnoException;
          code = typeof spawnErr.code === "number" ? spawnErr.code : 127;
        }
        resolve({ code, stdout, stderr });
      });
    });
  }
}

export const PIN_DIR = "/sys/fs/bpf/edtemu";
export const PROG_PIN = `${PIN_DIR}/edt_emulate`;
export const PARAMS_PIN = `${PIN_DIR}/emu_params`;
export const TSTAMPS_PIN = `${PIN_DIR}/flow_tstamps`;

/** Compiled classifier object, as produced by `npm run build:bpf`. */
export const DEFAULT_OBJECT = path.join(__dirname, "..", "bpf", "edt_kernel.o");

async function mustRun(runner: CommandRunner, argv: string[]): Promise<CommandResult> {
  const result = await runner.run(argv);
  if (result.code !== 0) {
    throw new CommandError(argv, result);
  }
  return result;
}

async function pinsPresent(runner: CommandRunner): Promise<boolean> {
  const result = await runner.run(["bpftool", "map", "show", "pinned", PARAMS_PIN]);
  return result.code === 0;
}

export interface AttachOptions {
  runner: CommandRunner;
  objectPath?: string;
}

export async function attach(device: string, opts: AttachOptions): Promise<void> {
  const { runner } = opts;
  const objectPath = opts.objectPath ?? DEFAULT_OBJECT;

  const link = await runner.run(["ip", "link", "show", "dev", device]);
  if (link.code !== 0) {
    throw new CommandError(["ip", "link", "show", "dev", device], link);
  }
  if (await pinsPresent(runner)) {
    throw new Error(`already attached: pinned maps present at ${PIN_DIR}`);
  }

  const done: string[][] = []; // undo commands, applied in reverse on failure
  const step = async (argv: string[], undo?: string[]) => {
    await mustRun(runner, argv);
    if (undo) done.push(undo);
  };
  try {
    await step(["mkdir", "-p", PIN_DIR], ["rm", "-rf", PIN_DIR]);
    await step(
      ["bpftool", "prog", "load", objectPath, PROG_PIN, "type", "classifier", "pinmaps", PIN_DIR],
    );
    await step(["tc", "qdisc", "add", "dev", device, "clsact"], ["tc", "qdisc", "del", "dev", device, "clsact"]);
    await step(["tc", "filter", "add", "dev", device, "egress", "bpf", "da", "pinned", PROG_PIN]);
    await step(["tc", "qdisc", "replace", "dev", device, "root", "fq"], ["tc", "qdisc", "del", "dev", device, "root"]);
  } catch (err) {
    for (const undo of done.reverse()) {
      await runner.run(undo); // best effort; the original error wins
    }
    throw err;
  }
}

export interface DetachOptions {
  runner: CommandRunner;
}

export async function detach(device: string, opts: DetachOptions): Promise<void> {
  const { runner } = opts;
  if (!(await pinsPresent(runner))) {
    throw new Error(`not attached: no pinned maps at ${PIN_DIR}`);
  }
  await mustRun(runner, ["tc", "qdisc", "del", "dev", device, "root"]);
  await mustRun(runner, ["tc", "qdisc", "del", "dev", device, "clsact"]); // drops the egress filter too
  await mustRun(runner, ["rm", "-rf", PIN_DIR]);
}

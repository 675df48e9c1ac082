/**
 * Kernel-side companion to the emulation agent: attach or detach the
 * egress classifier on a device and load link configs into the pinned
 * parameter map.
 *
 * Exit codes: 0 on success, 1 for usage or config-file errors, 2 for
 * runtime failures (command failed, device missing, not attached).
 */

import { readFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { ConfigError, parseLinkConfig } from "./config";
import { loadConfig } from "./maps";
import { CommandRunner, ExecRunner, PIN_DIR, attach, detach } from "./tc";

const USAGE = `usage: edt-datapath <command> ...

commands:
  attach <device> [--object <path>]   install classifier, FQ qdisc, pinned maps
  detach <device>                     remove them and restore the device
  load <config>                       write a link config into the pinned map

maps are pinned under ${PIN_DIR}`;

class UsageError extends Error {}

export async function main(argv: string[], runner: CommandRunner = new ExecRunner()): Promise<number> {
  try {
    const { values, positionals } = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        object: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
    });
    if (values.help || positionals.length === 0) {
      console.log(USAGE);
      return values.help ? 0 : 1;
    }
    const [command, ...rest] = positionals;
    switch (command) {
      case "attach": {
        if (rest.length !== 1) throw new UsageError("attach needs exactly one device");
        await attach(rest[0], { runner, objectPath: values.object });
        console.log(`attached to ${rest[0]}`);
        return 0;
      }
      case "detach": {
        if (rest.length !== 1) throw new UsageError("detach needs exactly one device");
        if (values.object !== undefined) throw new UsageError("detach takes no --object");
        await detach(rest[0], { runner });
        console.log(`detached from ${rest[0]}`);
        return 0;
      }
      case "load": {
        if (rest.length !== 1) throw new UsageError("load needs exactly one config path");
        if (values.object !== undefined) throw new UsageError("load takes no --object");
        const specs = parseLinkConfig(readFileSync(rest[0], "utf8"));
        const report = await loadConfig(specs, { runner });
        console.log(`loaded ${report.entryCount} entries in ${report.elapsedMs.toFixed(1)} ms`);
        return 0;
      }
      default:
        throw new UsageError(`unknown command ${JSON.stringify(command)}`);
    }
  } catch (err) {
    if (err instanceof ConfigError) {
      for (const fault of err.faults) {
        console.error(`line ${fault.line}: ${fault.reason}`);
      }
      return 1;
    }
    if (err instanceof UsageError || (err as Error).name === "TypeError") {
      // parseArgs reports unknown flags as TypeError
      console.error((err as Error).message);
      console.error(USAGE);
      return 1;
    }
    console.error((err as Error).message);
    return 2;
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}

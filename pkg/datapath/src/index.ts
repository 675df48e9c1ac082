export {
  DST_KEY_SIZE,
  MAP_CAPACITY,
  PAIR_KEY_SIZE,
  WIRE_PARAMS_SIZE,
  WireLinkParams,
  decodeDstKey,
  decodePairKey,
  decodeParams,
  encodeDstKey,
  encodePairKey,
  encodeParams,
  formatIPv4,
  parseIPv4,
  toHexBytes,
} from "./wire";
export {
  ConfigError,
  ConfigFault,
  DELAY_UNITS,
  LinkSpec,
  RATE_UNITS,
  parseDelayToken,
  parseLinkConfig,
  parseRateToken,
} from "./config";
export {
  AttachOptions,
  CommandError,
  CommandResult,
  CommandRunner,
  DEFAULT_OBJECT,
  DetachOptions,
  ExecRunner,
  PARAMS_PIN,
  PIN_DIR,
  PROG_PIN,
  TSTAMPS_PIN,
  attach,
  detach,
} from "./tc";
export {
  LoadReport,
  MapOptions,
  loadConfig,
  lookupEntry,
  removeEntry,
  updateEntry,
} from "./maps";
export { main } from "./cli";

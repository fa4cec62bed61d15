export {
  BadConfigError,
  BusyError,
  EnvforgeClient,
  PROTOCOL_VERSION,
  ProtocolFault,
  RemoteSession,
  SessionTerminatedError,
  TransportError,
  UnknownSessionError,
} from "./client.js";
export type { ConnectOptions } from "./client.js";
export {
  buildCloseRequest,
  buildResetRequest,
  buildSpecRequest,
  buildStepRequest,
} from "./protocol.js";
export type {
  AugmentSpec,
  ConfigOverrides,
  ResetBundle,
  SpecBundle,
  StepBundle,
} from "./protocol.js";
export {
  JSON_SAFE_SEED_MASK,
  Rng,
  derive,
  episodeSeed,
  fnv1a64,
  mix64,
  policyRng,
  uniformRandomResponse,
} from "./rng.js";

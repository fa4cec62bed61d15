/**
 * Wire types and canonical request serialization.
 *
 * Requests are JSON objects with a fixed field order and no added fields;
 * golden transcripts are compared byte-for-byte, so the serialization
 * here must match the server-side builders exactly.
 */

export interface AugmentSpec {
  epsilon: number;
  prob: number;
  alpha?: number;
  seed?: number;
}

export interface ConfigOverrides {
  max_steps?: number;
  success_reward?: number;
  failure_reward?: number;
  invalid_penalty?: number;
  thinking_required?: boolean;
}

export interface ResetBundle {
  session: string;
  task: string;
  observation: string;
  admissible_actions: string[];
}

export interface StepBundle {
  observation: string;
  reward: number;
  done: boolean;
  truncated: boolean;
  parsed_action: string | null;
  invalid: boolean;
  admissible_actions: string[];
}

export interface SpecBundle {
  protocol: number;
  service: string;
  version: string;
  envs: string[];
}

export interface WireError {
  code: string;
  message: string;
}

export interface WireResponse {
  id: number | string | null;
  ok: boolean;
  payload?: unknown;
  error?: WireError;
}

export function buildSpecRequest(id: number): string {
  return JSON.stringify({ id, op: "spec" });
}

export function buildResetRequest(
  id: number,
  env: string,
  seed: number,
  config?: ConfigOverrides,
  augment?: AugmentSpec,
  thinking: boolean = true,
): string {
  const request: Record<string, unknown> = { id, op: "reset", env, seed };
  if (config !== undefined) request.config = config;
  if (augment !== undefined) request.augment = augment;
  request.thinking = thinking;
  return JSON.stringify(request);
}

export function buildStepRequest(id: number, session: string, response: string): string {
  return JSON.stringify({ id, op: "step", session, response });
}

export function buildCloseRequest(id: number, session: string): string {
  return JSON.stringify({ id, op: "close", session });
}

/**
 * Synchronous-feeling TCP client for the rollout protocol.
 *
 * One request in flight at a time per connection; responses surface as
 * typed payloads and protocol errors as typed exceptions. Sessions guard
 * against stepping after the episode ended locally, without any wire
 * traffic.
 */

import * as net from "node:net";

import {
  AugmentSpec,
  ConfigOverrides,
  ResetBundle,
  SpecBundle,
  StepBundle,
  WireResponse,
  buildCloseRequest,
  buildResetRequest,
  buildSpecRequest,
  buildStepRequest,
} from "./protocol.js";

export const PROTOCOL_VERSION = 1;

export class TransportError extends Error {}

export class ProtocolFault extends Error {
  constructor(
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export class BadConfigError extends ProtocolFault {}
export class UnknownSessionError extends ProtocolFault {}
export class SessionTerminatedError extends ProtocolFault {}
export class BusyError extends ProtocolFault {}

function faultFor(code: string, message: string): ProtocolFault {
  switch (code) {
    case "BadConfig":
      return new BadConfigError(code, message);
    case "UnknownSession":
      return new UnknownSessionError(code, message);
    case "SessionTerminated":
      return new SessionTerminatedError(code, message);
    case "Busy":
      return new BusyError(code, message);
    default:
      return new ProtocolFault(code, message);
  }
}

export interface ConnectOptions {
  host: string;
  port: number;
  /** Record raw request/response lines for transcript comparison. */
  captureWire?: boolean;
  timeoutMs?: number;
}

export class EnvforgeClient {
  readonly sentLines: string[] = [];
  readonly receivedLines: string[] = [];
  spec: SpecBundle | undefined;

  private socket: net.Socket;
  private buffer = "";
  private pending: Array<{
    resolve: (line: string) => void;
    reject: (err: Error) => void;
  }> = [];
  private nextId = 1;
  private capture: boolean;
  private closed = false;

  private constructor(socket: net.Socket, capture: boolean) {
    this.socket = socket;
    this.capture = capture;
    socket.on("data", (chunk) => this.onData(chunk));
    socket.on("error", (err) => this.failAll(new TransportError(err.message)));
    socket.on("close", () => {
      if (!this.closed) this.failAll(new TransportError("connection closed"));
    });
  }

  /** Connect and verify the protocol version with a spec request. */
  static async connect(options: ConnectOptions): Promise<EnvforgeClient> {
    const socket = await new Promise<net.Socket>((resolve, reject) => {
      const s = net.createConnection({ host: options.host, port: options.port });
      s.setNoDelay(true);
      if (options.timeoutMs) {
        s.setTimeout(options.timeoutMs, () => {
          s.destroy();
          reject(new TransportError("connect timeout"));
        });
      }
      s.once("connect", () => resolve(s));
      s.once("error", (err) => reject(new TransportError(err.message)));
    });
    const client = new EnvforgeClient(socket, options.captureWire ?? false);
    const spec = (await client.request(buildSpecRequest(client.takeId()))) as SpecBundle;
    if (spec.protocol !== PROTOCOL_VERSION) {
      client.end();
      throw new TransportError(`protocol ${spec.protocol} unsupported`);
    }
    client.spec = spec;
    return client;
  }

  async reset(
    env: string,
    seed: number,
    options: { config?: ConfigOverrides; augment?: AugmentSpec; thinking?: boolean } = {},
  ): Promise<RemoteSession> {
    const thinking = options.thinking ?? true;
    const payload = (await this.request(
      buildResetRequest(this.takeId(), env, seed, options.config, options.augment, thinking),
    )) as ResetBundle;
    return new RemoteSession(this, payload, thinking);
  }

  /** Send one raw step request; used by RemoteSession. */
  async stepRaw(session: string, response: string): Promise<StepBundle> {
    return (await this.request(buildStepRequest(this.takeId(), session, response))) as StepBundle;
  }

  async closeSession(session: string): Promise<void> {
    await this.request(buildCloseRequest(this.takeId(), session));
  }

  end(): void {
    this.closed = true;
    this.socket.end();
    this.socket.destroy();
  }

  private takeId(): number {
    return this.nextId++;
  }

  private async request(line: string): Promise<unknown> {
    if (this.closed) throw new TransportError("client closed");
    const reply = new Promise<string>((resolve, reject) => {
      this.pending.push({ resolve, reject });
    });
    if (this.capture) this.sentLines.push(line);
    this.socket.write(line + "\n");
    const responseLine = await reply;
    if (this.capture) this.receivedLines.push(responseLine);
    const response = JSON.parse(responseLine) as WireResponse;
    if (!response.ok) {
      const err = response.error ?? { code: "Unknown", message: "" };
      throw faultFor(err.code, err.message);
    }
    return response.payload;
  }

  private onData(chunk: Buffer): void {
    this.buffer += chunk.toString("utf8");
    let index;
    while ((index = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, index);
      this.buffer = this.buffer.slice(index + 1);
      const waiter = this.pending.shift();
      if (waiter) waiter.resolve(line);
    }
  }

  private failAll(err: Error): void {
    while (this.pending.length) this.pending.shift()!.reject(err);
  }
}

/** Client-side view of one server episode. */
export class RemoteSession {
  readonly id: string;
  readonly task: string;
  readonly thinking: boolean;
  lastObservation: string;
  admissibleActions: string[];
  done = false;

  constructor(
    private client: EnvforgeClient,
    bundle: ResetBundle,
    thinking: boolean,
  ) {
    this.id = bundle.session;
    this.task = bundle.task;
    this.thinking = thinking;
    this.lastObservation = bundle.observation;
    this.admissibleActions = bundle.admissible_actions;
  }

  /** Step the episode; refuses locally once done/truncated. */
  async step(rawResponse: string): Promise<StepBundle> {
    if (this.done) {
      throw new SessionTerminatedError("SessionTerminated", "episode already ended (local guard)");
    }
    const bundle = await this.client.stepRaw(this.id, rawResponse);
    this.lastObservation = bundle.observation;
    this.admissibleActions = bundle.admissible_actions;
    this.done = bundle.done || bundle.truncated;
    return bundle;
  }

  async close(): Promise<void> {
    await this.client.closeSession(this.id);
  }
}

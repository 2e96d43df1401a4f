/**
 * Client for stylemark's per-step watermark session server.
 *
 * The server (`stylemark step-serve`, or `python3 -m stylemark.cli
 * step-serve`) speaks one JSON object per line over stdio. Each session
 * tracks one generation stream's keystream; the host feeds the text
 * emitted since the previous step and receives adjusted logits back.
 * Feed each completed word together with its trailing delimiter (space
 * or punctuation) so the key updates at the same step boundary a
 * token-level generator would use.
 */

import { type ChildProcessWithoutNullStreams, spawn } from "node:child_process";
import { createInterface, type Interface } from "node:readline";

/** Boost configuration mirrored from the Python WatermarkConfig. */
export interface WatermarkConfig {
  deltaAcro?: number;
  deltaSenso?: number;
  deltaRedgreen?: number;
  gamma?: number;
  /** Feature subset; defaults to all of "acro", "senso", "redgreen". */
  enabled?: string[];
}

/** Keystream state after the most recent feed. */
export interface KeyState {
  sensoClass: number;
  acroLetter: number;
}

export interface SessionOptions {
  config?: WatermarkConfig;
  vocabulary: string[];
  /** Path to a sensorimotor norms CSV, resolved by the server process. */
  normsPath?: string;
  /** Path to a class-frequency CSV; omitted means uniform baselines. */
  frequenciesPath?: string;
}

export interface StepResult {
  logits: Float64Array;
  state: KeyState;
  sentenceStart: boolean;
}

interface WireResponse {
  ok: boolean;
  error?: string;
  session?: number;
  logits?: number[];
  state?: { senso_class: number; acro_letter: number };
  sentence_start?: boolean;
}

export class BridgeError extends Error {}

function toWireConfig(config: WatermarkConfig): Record<string, unknown> {
  const wire: Record<string, unknown> = {};
  if (config.deltaAcro !== undefined) wire.delta_acro = config.deltaAcro;
  if (config.deltaSenso !== undefined) wire.delta_senso = config.deltaSenso;
  if (config.deltaRedgreen !== undefined) wire.delta_redgreen = config.deltaRedgreen;
  if (config.gamma !== undefined) wire.gamma = config.gamma;
  if (config.enabled !== undefined) wire.enabled = config.enabled;
  return wire;
}

function toKeyState(state: { senso_class: number; acro_letter: number }): KeyState {
  return { sensoClass: state.senso_class, acroLetter: state.acro_letter };
}

/**
 * Owns the server subprocess. Requests are strictly ordered: the server
 * answers one line per request line, so a FIFO of pending resolvers is
 * enough to correlate them.
 */
export class StepServer {
  private child: ChildProcessWithoutNullStreams;
  private lines: Interface;
  private pending: Array<{
    resolve: (response: WireResponse) => void;
    reject: (error: Error) => void;
  }> = [];
  private closed = false;

  /**
   * @param command server argv; defaults to `python3 -m stylemark.cli
   *   step-serve` (override via options or the STYLEMARK_SERVER env var,
   *   e.g. "stylemark step-serve").
   */
  constructor(command?: string[]) {
    const argv =
      command ??
      (process.env.STYLEMARK_SERVER
        ? process.env.STYLEMARK_SERVER.split(" ")
        : ["python3", "-m", "stylemark.cli", "step-serve"]);
    this.child = spawn(argv[0], argv.slice(1), {
      stdio: ["pipe", "pipe", "pipe"],
    });
    this.lines = createInterface({ input: this.child.stdout });
    this.lines.on("line", (line) => {
      const waiter = this.pending.shift();
      if (!waiter) return;
      try {
        waiter.resolve(JSON.parse(line) as WireResponse);
      } catch (error) {
        waiter.reject(new BridgeError(`unparseable server line: ${line}`));
      }
    });
    this.child.on("close", (code) => {
      this.closed = true;
      const error = new BridgeError(`server exited with code ${code}`);
      for (const waiter of this.pending.splice(0)) waiter.reject(error);
    });
  }

  private request(payload: Record<string, unknown>): Promise<WireResponse> {
    if (this.closed) {
      return Promise.reject(new BridgeError("server is closed"));
    }
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.child.stdin.write(JSON.stringify(payload) + "\n");
    });
  }

  private async call(payload: Record<string, unknown>): Promise<WireResponse> {
    const response = await this.request(payload);
    if (!response.ok) {
      throw new BridgeError(response.error ?? "server reported an error");
    }
    return response;
  }

  async newSession(options: SessionOptions): Promise<StepSession> {
    const response = await this.call({
      op: "new",
      config: toWireConfig(options.config ?? {}),
      vocabulary: options.vocabulary,
      norms_path: options.normsPath,
      frequencies_path: options.frequenciesPath,
    });
    return new StepSession(this, response.session!, toKeyState(response.state!));
  }

  /** @internal */
  async step(session: number, logits: ArrayLike<number>, delta: string): Promise<StepResult> {
    const response = await this.call({
      op: "step",
      session,
      logits: Array.from(logits),
      delta,
    });
    return {
      logits: Float64Array.from(response.logits!),
      state: toKeyState(response.state!),
      sentenceStart: response.sentence_start!,
    };
  }

  /** @internal */
  async closeSession(session: number): Promise<void> {
    await this.call({ op: "close", session });
  }

  /** Terminate the subprocess. Pending requests are rejected. */
  close(): void {
    this.closed = true;
    this.child.stdin.end();
    this.child.kill();
  }
}

/** One generation stream's watermark state, held server-side. */
export class StepSession {
  /** Key state after the most recent feed. */
  state: KeyState;

  constructor(
    private server: StepServer,
    private id: number,
    initialState: KeyState,
  ) {
    this.state = initialState;
  }

  /**
   * Feed the text emitted since the last step, then adjust `logits`.
   * Acts as a logits processor: the returned vector replaces the input
   * for sampling.
   */
  async step(logits: ArrayLike<number>, delta = ""): Promise<StepResult> {
    const result = await this.server.step(this.id, logits, delta);
    this.state = result.state;
    return result;
  }

  async close(): Promise<void> {
    await this.server.closeSession(this.id);
  }
}

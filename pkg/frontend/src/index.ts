/**
 * Bindings for the freshreplay prioritized replay buffer.
 *
 * The buffer runs in a Python host process (the same library the trainer
 * uses natively); this module speaks its line-delimited JSON protocol over
 * stdio.  Trajectories cross the boundary as flat numeric records, batches
 * come back as plain arrays, and the host never calls back into JS.
 *
 * A handle is single-owner: issuing a call while another is still pending
 * is an error (`E_BUSY`), detected locally before anything hits the wire.
 *
 * Protocol version 1.0.0; the host reports its own version at `open` and a
 * major-version mismatch fails the handshake.
 */

import { type ChildProcessWithoutNullStreams, spawn } from "node:child_process";
import { once } from "node:events";
import { fileURLToPath } from "node:url";
import * as path from "node:path";
import * as readline from "node:readline";

export const PROTOCOL_VERSION = "1.0.0";

/** One step: [state_id, action_id, reward, behavior_logprob, next_state_id, terminal]. */
export type StepTuple = [number, number, number, number, number, 0 | 1];

export interface PrioritySignalRecord {
  reward?: number;
  advantage?: number;
  td_error?: number;
}

/** Flat numeric trajectory record, as documented by the host schema. */
export interface TrajectoryRecord {
  steps: StepTuple[];
  episode_return: number;
  collection_step: number;
  /** Defaults to a reward signal equal to episode_return. */
  signal?: PrioritySignalRecord;
}

export interface BufferConfig {
  capacity?: number;
  alpha?: number;
  beta_start?: number;
  beta_end?: number;
  beta_anneal_steps?: number;
  /** Age-decay constant in gradient steps; "inf" disables decay. */
  tau?: number | "inf";
  epsilon?: number;
  base_kind?: "reward_magnitude" | "advantage_magnitude" | "td_error_magnitude";
  eviction_policy?: "lowest_effective_priority" | "fifo";
  seed?: number;
}

export interface InsertResult {
  slot: number;
  trajectory_id: number;
}

export interface SampleResult {
  trajectory_ids: number[];
  slots: number[];
  sample_probs: number[];
  is_weights: number[];
  buffer_size: number;
}

export interface RefreshResult {
  entries_scanned: number;
  wall_time: number;
}

export type ErrorCode =
  | "E_SCHEMA"
  | "E_CLOSED"
  | "E_EMPTY_BUFFER"
  | "E_FROZEN_BASE"
  | "E_UNKNOWN_ID"
  | "E_BAD_ARG"
  | "E_INTERNAL"
  | "E_BUSY"
  | "E_PROTOCOL";

export class BindingsError extends Error {
  readonly code: ErrorCode;

  constructor(code: ErrorCode, message: string) {
    super(message);
    this.name = "BindingsError";
    this.code = code;
  }
}

export interface OpenOptions {
  /** Python interpreter to run the host with (default "python3"). */
  pythonPath?: string;
  /** Override the host script location (default: bundled host/buffer_host.py). */
  hostScript?: string;
  /** Extra environment variables for the host process. */
  env?: Record<string, string>;
}

interface WireResponse {
  id: number;
  ok: boolean;
  result?: unknown;
  error?: { code: ErrorCode; message: string };
}

function defaultHostScript(): string {
  const here = path.dirname(fileURLToPath(import.meta.url));
  // dist/src -> package root -> host/
  return path.resolve(here, "..", "..", "host", "buffer_host.py");
}

export class BufferHandle {
  private readonly child: ChildProcessWithoutNullStreams;
  private readonly pending = new Map<number, {
    resolve: (value: unknown) => void;
    reject: (err: Error) => void;
  }>();
  private nextId = 1;
  private closed = false;
  private spawnError: Error | null = null;

  private constructor(child: ChildProcessWithoutNullStreams) {
    this.child = child;
    const rl = readline.createInterface({ input: child.stdout });
    rl.on("line", (line) => this.onLine(line));
    child.on("error", (err) => this.failAll(new BindingsError("E_INTERNAL", String(err))));
    child.on("exit", (code) => {
      if (!this.closed) {
        this.failAll(new BindingsError("E_CLOSED", `host exited early (code ${code})`));
      }
    });
  }

  /** Spawn a host process and open a buffer with the given config. */
  static async open(config: BufferConfig = {}, options: OpenOptions = {}): Promise<BufferHandle> {
    const python = options.pythonPath ?? "python3";
    const script = options.hostScript ?? defaultHostScript();
    const child = spawn(python, ["-u", script], {
      stdio: ["pipe", "pipe", "pipe"],
      env: { ...process.env, ...options.env },
    });
    const handle = new BufferHandle(child);
    let result: { protocol_version: string; capacity: number };
    try {
      result = (await handle.call("open", { config })) as typeof result;
    } catch (err) {
      await handle.dispose();
      throw err;
    }
    const major = result.protocol_version.split(".")[0];
    if (major !== PROTOCOL_VERSION.split(".")[0]) {
      await handle.dispose();
      throw new BindingsError(
        "E_PROTOCOL",
        `host protocol ${result.protocol_version} incompatible with ${PROTOCOL_VERSION}`,
      );
    }
    return handle;
  }

  /** Tear the host down without the close handshake (failed open, errors). */
  private async dispose(): Promise<void> {
    this.closed = true;
    this.child.stdin.end();
    if (this.child.exitCode === null) {
      const exited = once(this.child, "exit");
      this.child.kill("SIGTERM");
      await exited;
    }
  }

  get pid(): number | undefined {
    return this.child.pid;
  }

  async insert(record: TrajectoryRecord, currentStep?: number): Promise<InsertResult> {
    const payload: Record<string, unknown> = { record };
    payload.current_step = currentStep ?? record.collection_step;
    return (await this.call("insert", payload)) as InsertResult;
  }

  async sample(batchSize: number, beta: number): Promise<SampleResult> {
    return (await this.call("sample", { batch_size: batchSize, beta })) as SampleResult;
  }

  async refresh(currentStep: number): Promise<RefreshResult> {
    return (await this.call("refresh", { current_step: currentStep })) as RefreshResult;
  }

  /** The buffer's documented snapshot dump (one record line per entry). */
  async snapshot(): Promise<string[]> {
    const result = (await this.call("snapshot", {})) as { lines: string[] };
    return result.lines;
  }

  async close(): Promise<void> {
    if (this.closed) {
      return;
    }
    try {
      await this.call("close", {});
    } finally {
      this.closed = true;
      this.child.stdin.end();
      if (this.child.exitCode === null) {
        await once(this.child, "exit");
      }
    }
  }

  /** Forward a raw call from a pre-generated script line (parity testing). */
  async rawCall(op: string, payload: Record<string, unknown>): Promise<unknown> {
    return this.call(op, payload);
  }

  private call(op: string, payload: Record<string, unknown>): Promise<unknown> {
    if (this.closed) {
      return Promise.reject(new BindingsError("E_CLOSED", "handle is closed"));
    }
    if (this.spawnError) {
      return Promise.reject(this.spawnError);
    }
    if (this.pending.size > 0) {
      // single-owner contract: no overlapping calls
      return Promise.reject(new BindingsError("E_BUSY", "a call is already in flight"));
    }
    const id = this.nextId++;
    const line = JSON.stringify({ id, op, ...payload });
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      this.child.stdin.write(line + "\n", (err) => {
        if (err) {
          this.pending.delete(id);
          reject(new BindingsError("E_INTERNAL", String(err)));
        }
      });
    });
  }

  private onLine(line: string): void {
    let response: WireResponse;
    try {
      response = JSON.parse(line) as WireResponse;
    } catch {
      this.failAll(new BindingsError("E_PROTOCOL", `unparseable host line: ${line}`));
      return;
    }
    const waiter = this.pending.get(response.id);
    if (!waiter) {
      return;
    }
    this.pending.delete(response.id);
    if (response.ok) {
      waiter.resolve(response.result);
    } else {
      const error = response.error ?? { code: "E_INTERNAL" as const, message: "unknown error" };
      waiter.reject(new BindingsError(error.code, error.message));
    }
  }

  private failAll(err: Error): void {
    this.spawnError = err;
    for (const waiter of this.pending.values()) {
      waiter.reject(err);
    }
    this.pending.clear();
  }
}

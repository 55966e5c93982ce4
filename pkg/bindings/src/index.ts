/**
 * Thin in-process bindings for the molrewards scoring engine.
 *
 * Every call shells out to the core CLI, so results are bit-identical to
 * command-line runs by construction: these bindings marshal inputs and
 * outputs and contain no numeric code of their own. Call frequency is
 * per-rollout, so per-call process spawn cost is acceptable.
 */

import { spawnSync } from "node:child_process";

export const VERSION = "0.1.0";

export interface BindOptions {
  /** Criteria registry JSON path; omitted = packaged default. */
  registryPath?: string;
  /** Endpoint alias lexicon JSON path; omitted = packaged default. */
  lexiconPath?: string;
  /** Command used to invoke the core CLI. */
  python?: string[];
}

export interface BoundHandle {
  readonly command: string[];
  readonly configArgs: string[];
  readonly endpoints: number;
  readonly configFingerprint: string;
}

export interface PairRecordInput {
  id?: string | number;
  original_smiles: string;
  optimized_smiles: string;
  original_admet?: Record<string, number>;
  optimized_admet?: Record<string, number>;
  reasoning?: string;
  binding_energy_original?: number;
  binding_energy_optimized?: number;
}

export interface Objectives {
  f1: number;
  lms: number;
  richness: number;
  opt_score: number;
  similarity: number;
  binding_energy: number;
}

export interface TrajectoryWeight {
  id: string | number;
  weight: number;
  raw_weight: number;
  pareto: boolean;
}

export interface BatchAdaptation {
  group_scales: [number, number];
  channel_boosts: number[];
  frontier_ratio: number;
  mean_weight: number;
}

export class CoreError extends Error {
  constructor(message: string, readonly exitCode: number | null) {
    super(message);
    this.name = "CoreError";
  }
}

function defaultCommand(): string[] {
  const override = process.env.MOLREWARDS_PYTHON;
  if (override) return override.split(" ");
  return ["python3", "-m", "molrewards"];
}

function run(command: string[], args: string[], input?: string): string {
  const [head, ...rest] = command;
  const proc = spawnSync(head, [...rest, ...args], {
    input,
    encoding: "utf-8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (proc.error) {
    throw new CoreError(`failed to invoke core CLI: ${proc.error.message}`, null);
  }
  if (proc.status !== 0) {
    const detail = (proc.stderr || proc.stdout || "").trim();
    throw new CoreError(detail || `core CLI exited with ${proc.status}`, proc.status);
  }
  return proc.stdout;
}

/**
 * Load and validate scoring configuration, returning a handle whose calls
 * all route through the core CLI. Config problems (missing files, wrong
 * endpoint count) surface as CoreError with the core's error text.
 */
export function bindLoad(options: BindOptions = {}): BoundHandle {
  const command = options.python ?? defaultCommand();
  const configArgs: string[] = [];
  if (options.registryPath) configArgs.push("--registry", options.registryPath);
  if (options.lexiconPath) configArgs.push("--lexicon", options.lexiconPath);
  const out = JSON.parse(run(command, ["check-config", ...configArgs]));
  return {
    command,
    configArgs,
    endpoints: out.endpoints,
    configFingerprint: out.config_fingerprint,
  };
}

/** Version string of the core CLI backing this handle. */
export function coreVersion(handle: BoundHandle): string {
  const text = run(handle.command, ["--version"]).trim();
  const match = text.match(/version\s+(\S+)/);
  if (!match) throw new CoreError(`unparseable version output: ${text}`, null);
  return match[1];
}

/** Full metric map for one pair record, identical to `score --stdin`. */
export function scorePair(
  handle: BoundHandle,
  record: PairRecordInput,
): Record<string, unknown> {
  const payload = {
    id: record.id ?? "bindings",
    original_admet: {},
    optimized_admet: {},
    ...record,
  };
  const out = run(handle.command, ["score", ...handle.configArgs, "--stdin"],
    JSON.stringify(payload));
  return JSON.parse(out);
}

/** Alias for the evaluate-record operation; same code path as scorePair. */
export const evaluateRecord = scorePair;

/** Overall optimization score for two endpoint profiles. */
export function overallScore(
  handle: BoundHandle,
  originalSmiles: string,
  optimizedSmiles: string,
  originalAdmet: Record<string, number>,
  optimizedAdmet: Record<string, number>,
): number {
  const row = scorePair(handle, {
    original_smiles: originalSmiles,
    optimized_smiles: optimizedSmiles,
    original_admet: originalAdmet,
    optimized_admet: optimizedAdmet,
  });
  return row.overall_score as number;
}

/** ECFP4 Tanimoto similarity between two SMILES strings. */
export function tanimoto(
  handle: BoundHandle,
  originalSmiles: string,
  optimizedSmiles: string,
): number {
  const row = scorePair(handle, {
    original_smiles: originalSmiles,
    optimized_smiles: optimizedSmiles,
  });
  return row.similarity as number;
}

function reweight(
  handle: BoundHandle,
  batch: { id: string | number; objectives: Objectives }[],
  targets?: number[],
): { trajectories: TrajectoryWeight[]; batch: BatchAdaptation } {
  const input = batch.map((row) => JSON.stringify(row)).join("\n");
  const args = ["reweight", "-"];
  if (targets) args.push("--targets", JSON.stringify(targets));
  const lines = run(handle.command, args, input).trim().split("\n");
  const rows = lines.map((line) => JSON.parse(line));
  const summary = rows.find((row) => row.type === "batch");
  return {
    trajectories: rows.filter((row) => row.type === "trajectory"),
    batch: summary as BatchAdaptation,
  };
}

/** Pareto sample weights (raw and mean-normalized) for a rollout batch. */
export function sampleWeights(
  handle: BoundHandle,
  batch: { id: string | number; objectives: Objectives }[],
): TrajectoryWeight[] {
  return reweight(handle, batch).trajectories;
}

/** Group scales and channel shortfall boosts for a rollout batch. */
export function batchAdaptation(
  handle: BoundHandle,
  batch: { id: string | number; objectives: Objectives }[],
  targets?: number[],
): BatchAdaptation {
  return reweight(handle, batch, targets).batch;
}

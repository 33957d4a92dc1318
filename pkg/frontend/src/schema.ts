/**
 * Typed loading of dealersim experiment outputs.
 *
 * Two files per experiment directory: rows.csv (one row per evaluation step
 * per agent) and summary.json (the aggregates the figures draw from).  Any
 * deviation from the documented shapes raises SchemaError with the offending
 * column or key in the message; nothing here mutates the inputs.
 */

import { existsSync, readFileSync, readdirSync, statSync } from "node:fs";
import { join } from "node:path";
import Papa from "papaparse";

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

/** rows.csv column order, exactly as the experiment harness writes it. */
export const ROWS_COLUMNS = [
  "experiment", "sweep_key", "seed", "episode", "step", "agent_id",
  "family", "kind", "w", "gamma", "m_star", "q_buy", "q_sell",
  "eps_sym", "eps_asym", "eps", "hedge_fraction", "lt_choice", "reward",
  "d_spread_pnl", "d_inventory_pnl", "inventory", "counterparty",
] as const;

export type RowColumn = (typeof ROWS_COLUMNS)[number];

export interface Hist {
  edges: number[];
  counts: number[];
}

export interface PnlSide {
  mean: number;
  std: number;
  hist: Hist;
}

export interface Behavior {
  mids: number[];
  buys: number[];
  sells: number[];
}

export interface PointSummary {
  n_rows: number;
  mean_eps?: number;
  skew_intensity?: number;
  skew_intensity_active?: number | null;
  lt_frequencies: Record<string, { buy: number; sell: number; hold: number }>;
  lt_mean_episode_pnl: Record<string, number | null>;
  tweak_hist?: { eps: Hist; eps_sym: Hist; eps_asym: Hist; n_rows: number } | null;
  flow_by_tweak?: {
    edges: number[];
    lp_steps: number[];
    totals: Record<string, number[]>;
    mean: Record<string, number[]>;
  } | null;
  pnl_by_kind?: Record<string, { n_episodes: number; spread: PnlSide; inventory: PnlSide }> | null;
  per_seed?: Record<string, PointSummary>;
  lt_behavior?: Behavior;
}

export interface Summary {
  experiment: string;
  seeds: number[];
  sweep_keys: string[];
  eval_episodes: number;
  total_steps: number;
  points: Record<string, PointSummary>;
}

/** One loaded experiment directory. */
export interface Experiment {
  dir: string;
  summary: Summary;
  rowsHeader: string[];
  /** sweep-key family, the part before "=" in the first key (w, n_pnl, p, gamma) */
  prefix: string;
}

/** Unwrap a value that the documented summary shape promises to be present. */
export function need<T>(value: T | undefined | null, what: string): T {
  if (value === undefined || value === null) {
    throw new SchemaError(`missing ${what} in summary.json`);
  }
  return value;
}

export function sweepValue(key: string): number {
  const raw = key.split("=")[1];
  const v = Number(raw);
  if (raw === undefined || Number.isNaN(v)) {
    throw new SchemaError(`sweep key ${key} has no numeric value`);
  }
  return v;
}

export function keyPrefix(key: string): string {
  return key.split("=")[0] ?? key;
}

function checkRowsFile(path: string): string[] {
  if (!existsSync(path)) {
    throw new SchemaError(`rows file not found: ${path}`);
  }
  const text = readFileSync(path, "utf-8");
  if (text.trim() === "") {
    throw new SchemaError(`empty rows file: ${path}`);
  }
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`rows.csv parse failure: ${parsed.errors[0]?.message}`);
  }
  const header = parsed.data[0] ?? [];
  const missing = ROWS_COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(`rows.csv missing column(s): ${missing.join(", ")} in ${path}`);
  }
  const extra = header.filter((c) => !(ROWS_COLUMNS as readonly string[]).includes(c));
  if (extra.length > 0) {
    throw new SchemaError(`rows.csv has undocumented column(s): ${extra.join(", ")} in ${path}`);
  }
  if (parsed.data.length < 2) {
    throw new SchemaError(`rows file has a header but no data rows: ${path}`);
  }
  return header;
}

function checkSummary(path: string): Summary {
  if (!existsSync(path)) {
    throw new SchemaError(`summary file not found: ${path}`);
  }
  let data: unknown;
  try {
    data = JSON.parse(readFileSync(path, "utf-8"));
  } catch (exc) {
    throw new SchemaError(`summary.json is not valid JSON: ${(exc as Error).message}`);
  }
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    throw new SchemaError(`summary.json root must be an object: ${path}`);
  }
  const summary = data as Partial<Summary>;
  for (const key of ["experiment", "seeds", "sweep_keys", "eval_episodes", "total_steps", "points"]) {
    if (!(key in summary)) {
      throw new SchemaError(`summary.json missing key "${key}" in ${path}`);
    }
  }
  for (const key of summary.sweep_keys ?? []) {
    if (!(key in (summary.points ?? {}))) {
      throw new SchemaError(`summary.json missing points["${key}"] in ${path}`);
    }
  }
  return summary as Summary;
}

export function loadExperiment(dir: string): Experiment {
  const rowsHeader = checkRowsFile(join(dir, "rows.csv"));
  const summary = checkSummary(join(dir, "summary.json"));
  const first = summary.sweep_keys[0];
  if (first === undefined) {
    throw new SchemaError(`summary.json has no sweep keys in ${dir}`);
  }
  return { dir, summary, rowsHeader, prefix: keyPrefix(first) };
}

/**
 * Find experiment outputs under inputDir: either the directory itself or its
 * immediate subdirectories, each holding rows.csv + summary.json.
 */
export function discoverExperiments(inputDir: string): Experiment[] {
  if (!existsSync(inputDir)) {
    throw new SchemaError(`input directory not found: ${inputDir}`);
  }
  if (existsSync(join(inputDir, "summary.json"))) {
    return [loadExperiment(inputDir)];
  }
  const candidates = readdirSync(inputDir)
    .sort()
    .map((name) => join(inputDir, name))
    .filter((p) => statSync(p).isDirectory() && existsSync(join(p, "summary.json")));
  if (candidates.length === 0) {
    throw new SchemaError(`no experiment outputs (summary.json) under ${inputDir}`);
  }
  return candidates.map(loadExperiment);
}

// Client-side assembly of the run comparison table. Metric values and
// statuses come straight from run records; this module only arranges them:
// columns for the params that differ, rows sorted by the metric descending.

import type { RunRecordDoc } from "./types.js";

export interface CompareRow {
  runId: string;
  fingerprint: string;
  seed: number;
  params: Record<string, unknown>; // flattened instance.param keys
  value: number | null;
  note: string; // "" for done runs, "failed: ..." or the pending status
}

export interface CompareTable {
  metric: string;
  paramColumns: string[]; // differing params only, sorted
  rows: CompareRow[];
  warnings: string[];
}

function flatParams(record: RunRecordDoc): Record<string, unknown> {
  const flat: Record<string, unknown> = {};
  for (const [iid, kv] of Object.entries(record.params ?? {})) {
    for (const [pname, value] of Object.entries(kv)) {
      flat[`${iid}.${pname}`] = value;
    }
  }
  return flat;
}

function stableKey(value: unknown): string {
  if (value === undefined) return "undefined";
  if (value !== null && typeof value === "object" && !Array.isArray(value)) {
    const entries = Object.entries(value as Record<string, unknown>)
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
      .map(([k, v]) => `${JSON.stringify(k)}:${stableKey(v)}`);
    return `{${entries.join(",")}}`;
  }
  return JSON.stringify(value);
}

export function buildCompareTable(records: RunRecordDoc[],
                                  metric: string): CompareTable {
  if (records.length === 0) {
    throw new Error("compare needs at least one run");
  }
  if (!records.some((r) => metric in (r.metrics ?? {}))) {
    throw new Error(`metric '${metric}' not recorded on any selected run`);
  }

  const warnings: string[] = [];
  if (new Set(records.map((r) => r.dataset)).size > 1) {
    warnings.push("selected runs use different datasets");
  }
  if (records.some((r) => r.status !== "done")) {
    warnings.push("selected runs include non-done statuses");
  }

  const flats = new Map(records.map((r) => [r.run_id, flatParams(r)]));
  const allKeys = [...new Set([...flats.values()].flatMap(Object.keys))].sort();
  const paramColumns = allKeys.filter((key) => {
    const seen = new Set([...flats.values()].map((f) => stableKey(f[key])));
    return seen.size > 1;
  });

  const rows: CompareRow[] = records.map((r) => {
    const value = r.metrics?.[metric];
    let note = "";
    if (r.status === "failed") note = `failed: ${r.error || "unknown"}`;
    else if (r.status !== "done") note = r.status;
    return {
      runId: r.run_id, fingerprint: r.fingerprint, seed: r.seed,
      params: flats.get(r.run_id)!,
      value: value === undefined ? null : value, note,
    };
  });
  rows.sort((a, b) => {
    if ((a.value === null) !== (b.value === null)) return a.value === null ? 1 : -1;
    if (a.value !== null && b.value !== null && a.value !== b.value) {
      return b.value - a.value;
    }
    return a.runId < b.runId ? -1 : a.runId > b.runId ? 1 : 0;
  });
  return { metric, paramColumns, rows, warnings };
}

/** Format a cell the way the run tooling prints it ("-" for absent). */
export function formatCell(value: unknown): string {
  if (value === null || value === undefined) return "-";
  if (typeof value === "number") {
    return Number.isInteger(value) ? String(value) : String(Number(value.toPrecision(6)));
  }
  return String(value);
}

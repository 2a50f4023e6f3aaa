// Client-side mirror of the server's parameter checking. The rules must
// stay at least as strict as the server's for type and range errors: a
// value the server would 422 never leaves the form. Values the client
// cannot judge (chaining, scopes) are the server's to reject.

import type { ManifestDoc, ParamSpecDoc } from "./types.js";

export type ParamVerdict =
  | { ok: true; value: unknown }
  | { ok: false; message: string };

const INT_RE = /^[+-]?\d+$/;

function rangeCheck(spec: ParamSpecDoc, value: number): ParamVerdict {
  const lo = spec.min ?? -Infinity;
  const hi = spec.max ?? Infinity;
  if (value < lo || value > hi) {
    return {
      ok: false,
      message: `value ${value} outside range [${lo}, ${hi}]`,
    };
  }
  return { ok: true, value };
}

/** Check one already-typed value, mirroring the server's per-type rules. */
export function checkParamValue(spec: ParamSpecDoc, value: unknown): ParamVerdict {
  switch (spec.type) {
    case "int":
      if (typeof value === "boolean" || typeof value !== "number"
          || !Number.isInteger(value)) {
        return { ok: false, message: `expected int, got ${JSON.stringify(value)}` };
      }
      return rangeCheck(spec, value);
    case "float":
      if (typeof value === "boolean" || typeof value !== "number"
          || !Number.isFinite(value)) {
        return { ok: false, message: `expected float, got ${JSON.stringify(value)}` };
      }
      return rangeCheck(spec, value === 0 ? 0 : value);
    case "bool":
      if (typeof value !== "boolean") {
        return { ok: false, message: `expected bool, got ${JSON.stringify(value)}` };
      }
      return { ok: true, value };
    case "string":
      if (typeof value !== "string") {
        return { ok: false, message: `expected string, got ${JSON.stringify(value)}` };
      }
      return { ok: true, value };
    case "enum": {
      const choices = spec.choices ?? [];
      if (typeof value !== "string" || !choices.includes(value)) {
        return {
          ok: false,
          message: `value ${JSON.stringify(value)} not in choices [${choices.join(", ")}]`,
        };
      }
      return { ok: true, value };
    }
  }
}

/**
 * Check the raw text of a form field, producing the typed value that will
 * be serialized. Empty text means "use the manifest default" and is
 * handled by the caller, never here.
 */
export function checkParamText(spec: ParamSpecDoc, text: string): ParamVerdict {
  const trimmed = text.trim();
  switch (spec.type) {
    case "int": {
      if (!INT_RE.test(trimmed)) {
        return { ok: false, message: `expected an integer, got '${trimmed}'` };
      }
      const value = Number(trimmed);
      if (!Number.isSafeInteger(value)) {
        return { ok: false, message: `integer '${trimmed}' is too large` };
      }
      return checkParamValue(spec, value);
    }
    case "float": {
      const value = Number(trimmed);
      if (trimmed === "" || !Number.isFinite(value)) {
        return { ok: false, message: `expected a number, got '${trimmed}'` };
      }
      return checkParamValue(spec, value);
    }
    case "bool": {
      if (trimmed === "true") return { ok: true, value: true };
      if (trimmed === "false") return { ok: true, value: false };
      return { ok: false, message: `expected true or false, got '${trimmed}'` };
    }
    case "string":
    case "enum":
      return checkParamValue(spec, trimmed);
  }
}

export interface CardParamErrors {
  ok: boolean;
  errors: Record<string, string>; // param name -> message
}

/**
 * Validate a card's explicit params against its manifest: unknown names
 * rejected, every present value checked. Params left unset fall back to
 * manifest defaults server-side and need no check here (manifest defaults
 * are valid by construction).
 */
export function validateCardParams(manifest: ManifestDoc,
                                   given: Record<string, unknown>): CardParamErrors {
  const specs = new Map(manifest.params.map((p) => [p.name, p]));
  const errors: Record<string, string> = {};
  for (const [name, value] of Object.entries(given)) {
    const spec = specs.get(name);
    if (!spec) {
      errors[name] = `unknown param '${name}'`;
      continue;
    }
    const verdict = checkParamValue(spec, value);
    if (!verdict.ok) errors[name] = verdict.message;
  }
  return { ok: Object.keys(errors).length === 0, errors };
}

/** Hint text shown under a field: range, choices, or nothing. */
export function constraintHint(spec: ParamSpecDoc): string {
  if (spec.type === "enum") return `one of: ${(spec.choices ?? []).join(", ")}`;
  if (spec.min !== undefined && spec.max !== undefined) {
    return `${spec.type} in [${spec.min}, ${spec.max}]`;
  }
  if (spec.min !== undefined) return `${spec.type} >= ${spec.min}`;
  if (spec.max !== undefined) return `${spec.type} <= ${spec.max}`;
  return spec.type;
}

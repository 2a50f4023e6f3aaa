// Wire types for the control-plane HTTP API. These mirror the JSON the
// server actually sends; the UI never invents fields of its own here.

export type Section = "sample" | "dataset" | "batch";

export const SECTIONS: readonly Section[] = ["sample", "dataset", "batch"];

export type ParamType = "int" | "float" | "bool" | "string" | "enum";

export interface ParamSpecDoc {
  name: string;
  type: ParamType;
  default: unknown;
  min?: number;
  max?: number;
  choices?: string[];
  doc?: string;
}

export type PluginKind = "transform" | "loss" | "accuracy" | "split";

export interface ManifestDoc {
  name: string;
  version: string;
  kind: PluginKind;
  scopes: Section[];
  input: string;
  output: string;
  params: ParamSpecDoc[];
  description: string;
  exec: Record<string, string>;
}

export interface StepRef {
  plugin: string;
  version: string; // requirement: ^1, ^1.2, or =1.2.3
  instance_id: string;
}

export interface PipelineDoc {
  id: string;
  sample: StepRef[];
  dataset: StepRef[];
  batch: StepRef[];
}

// params file shape: instance_id -> {param: value}
export type ParamsDoc = Record<string, Record<string, unknown>>;

export interface StoredPipelineDoc {
  fingerprint: string;
  pipeline: PipelineDoc;
  params: ParamsDoc;
}

export type RunStatus = "queued" | "running" | "done" | "failed";

export interface RunRecordDoc {
  run_id: string;
  status: RunStatus;
  fingerprint: string;
  versions: Record<string, string>;
  params: ParamsDoc;
  seed: number;
  dataset: string;
  created?: string;
  started?: string | null;
  finished?: string | null;
  metrics: Record<string, number>;
  error?: string | null;
}

export interface DatasetDoc {
  name: string;
  path: string;
}

export interface RunRequestDoc {
  pipeline?: PipelineDoc;
  fingerprint?: string;
  params?: ParamsDoc;
  dataset: string;
  seed?: number;
  keywords?: string[];
  split?: Record<string, unknown>;
  probe?: Record<string, unknown>;
  jobs?: number;
}

export interface ErrorBody {
  error: { kind: string; message: string };
}

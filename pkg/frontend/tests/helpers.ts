// Shared scaffolding for the UI suites: a scripted API client, DOM lookup
// and event helpers, and a small deterministic PRNG.

import { ApiError, type ApiLike } from "../src/api.js";
import { App } from "../src/main.js";
import type {
  ParamsDoc,
  PipelineDoc,
  RunRecordDoc,
  RunStatus,
  Section,
  StoredPipelineDoc,
} from "../src/types.js";
import { FIXTURE_MANIFESTS } from "./fixtures.js";

export class FakeClient implements ApiLike {
  saveCalls: Array<{ pipeline: PipelineDoc; params: ParamsDoc }> = [];
  saveImpl: () => Promise<string> = async () => "a".repeat(64);
  runQueue: string[] = [];
  scripts = new Map<string, RunRecordDoc[]>();
  stored: StoredPipelineDoc[] = [];
  private calls = new Map<string, number>();

  async getPlugins() { return FIXTURE_MANIFESTS; }
  async getDatasets() { return [{ name: "kwsdata", path: "/data/kwsdata" }]; }
  async savePipeline(pipeline: PipelineDoc, params: ParamsDoc) {
    this.saveCalls.push({ pipeline, params });
    return this.saveImpl();
  }
  async listPipelines() { return this.stored; }
  async getPipeline(fingerprint: string) {
    const doc = this.stored.find((d) => d.fingerprint === fingerprint);
    if (!doc) throw new ApiError(404, "NotFound", `no stored pipeline '${fingerprint}'`);
    return doc;
  }
  async enqueueRun() { return this.runQueue.shift() ?? "run-overflow"; }
  async getRun(id: string) {
    const script = this.scripts.get(id) ?? [];
    const n = this.calls.get(id) ?? 0;
    this.calls.set(id, n + 1);
    return script[Math.min(n, script.length - 1)];
  }
  async getMetrics(id: string) {
    const script = this.scripts.get(id) ?? [];
    return script[script.length - 1]?.metrics ?? {};
  }
  async listRuns() { return [] as RunRecordDoc[]; }
  async postSweep() { return [] as string[]; }
}

export function record(id: string, status: RunStatus,
                       overrides: Partial<RunRecordDoc> = {}): RunRecordDoc {
  return {
    run_id: id, status, fingerprint: "a".repeat(64), versions: {},
    params: {}, seed: 0, dataset: "kwsdata", metrics: {}, ...overrides,
  };
}

/** Mount a fresh App on a clean document body. */
export async function mountApp(
    client: ApiLike,
    options: ConstructorParameters<typeof App>[2] = { sleep: async () => {} }) {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  document.body.appendChild(root);
  const app = new App(root, client, options);
  await app.init();
  return { app, root };
}

export function domIds(root: HTMLElement, section: Section): string[] {
  return [...root.querySelectorAll(`.column[data-section="${section}"] .card`)]
    .map((el) => el.getAttribute("data-instance-id") ?? "");
}

export function field(root: HTMLElement, cardId: string, param: string): HTMLElement {
  const wrapper = root.querySelector<HTMLElement>(
    `.card[data-instance-id="${cardId}"] .param-field[data-param="${param}"]`);
  if (!wrapper) throw new Error(`no field ${cardId}.${param} in the DOM`);
  return wrapper;
}

export function typeInto(wrapper: HTMLElement, text: string): void {
  const input = wrapper.querySelector<HTMLInputElement>("input");
  if (!input) throw new Error("no text input in this field");
  input.value = text;
  input.dispatchEvent(new Event("input"));
}

export function choose(wrapper: HTMLElement, value: string): void {
  const select = wrapper.querySelector<HTMLSelectElement>("select");
  if (!select) throw new Error("no select in this field");
  select.value = value;
  select.dispatchEvent(new Event("change"));
}

export function expand(root: HTMLElement, cardId: string): void {
  const btn = root.querySelector<HTMLElement>(
    `.card[data-instance-id="${cardId}"] .expand-btn`);
  if (!btn) throw new Error(`no expand button on card '${cardId}'`);
  btn.click();
}

export function renameCard(root: HTMLElement, cardId: string, newId: string): void {
  expand(root, cardId);
  const input = root.querySelector<HTMLInputElement>(
    `.card[data-instance-id="${cardId}"] .id-input`);
  if (!input) throw new Error(`no id input on card '${cardId}'`);
  input.value = newId;
  input.dispatchEvent(new Event("change"));
}

export function toasts(root: HTMLElement): string[] {
  return [...root.querySelectorAll(".toast")].map((t) => t.textContent ?? "");
}

/** mulberry32: tiny seedable PRNG so shuffle failures reproduce exactly. */
export function seededRandom(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

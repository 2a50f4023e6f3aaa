// Manifest fixtures shaped exactly like the server's catalog documents.
// `shaper` carries one param of every type so form checking can be swept
// without a live registry.

import type { ManifestDoc } from "../src/types.js";

export const FIXTURE_MANIFESTS: ManifestDoc[] = [
  {
    name: "gain",
    version: "1.0.0",
    kind: "transform",
    scopes: ["sample", "batch"],
    input: "audio",
    output: "audio",
    params: [
      { name: "db", type: "float", default: 0.0, min: -20.0, max: 20.0 },
    ],
    description: "scale amplitude",
    exec: { builtin: "gain" },
  },
  {
    name: "gain",
    version: "1.2.0",
    kind: "transform",
    scopes: ["sample", "batch"],
    input: "audio",
    output: "audio",
    params: [
      { name: "db", type: "float", default: 0.0, min: -20.0, max: 20.0 },
    ],
    description: "scale amplitude",
    exec: { builtin: "gain" },
  },
  {
    name: "gain",
    version: "2.0.0",
    kind: "transform",
    scopes: ["sample", "batch"],
    input: "audio",
    output: "audio",
    params: [
      { name: "db", type: "float", default: 0.0, min: -20.0, max: 20.0 },
    ],
    description: "scale amplitude",
    exec: { builtin: "gain" },
  },
  {
    name: "shaper",
    version: "1.0.0",
    kind: "transform",
    scopes: ["sample"],
    input: "audio",
    output: "audio",
    params: [
      { name: "length", type: "int", default: 10, min: 1, max: 100 },
      { name: "scale", type: "float", default: 0.5, min: 0.0, max: 1.0 },
      { name: "normalize", type: "bool", default: false },
      { name: "label", type: "string", default: "x" },
      {
        name: "window", type: "enum", default: "hann",
        choices: ["hann", "rectangular"],
      },
    ],
    description: "fixture with every param type",
    exec: { builtin: "shaper" },
  },
  {
    name: "squeeze",
    version: "1.0.0",
    kind: "transform",
    scopes: ["dataset"],
    input: "features",
    output: "features",
    params: [],
    description: "dataset-only fixture",
    exec: { builtin: "squeeze" },
  },
  {
    name: "top1_accuracy",
    version: "1.0.0",
    kind: "accuracy",
    scopes: [],
    input: "logits",
    output: "scalar",
    params: [],
    description: "argmax accuracy",
    exec: { builtin: "top1_accuracy" },
  },
];

#!/usr/bin/env python3
"""Walk through the external-plugin protocol with the peak_norm plugin.

Three stages: the registration handshake, one hand-rolled wire exchange
so the actual NDJSON lines are visible, and finally the same plugin
running inside a validated pipeline next to builtin steps.

    python3 demos/external_plugin/run_demo.py
"""

import json
from pathlib import Path

import numpy as np

from pipeforge import load_registry, pipeline_from_dict, validate_pipeline
from pipeforge.data import AudioClip, Dataset, SampleRecord
from pipeforge.engine import SeedPolicy, run_pipeline
from pipeforge.external import ExternalProcess, encode_payload, manifest_handshake

PLUGIN_DIR = Path(__file__).parent / "plugins"
EXE = PLUGIN_DIR / "peak_norm" / "1.0.0" / "peak_norm.py"


def shorten(doc: dict) -> dict:
    """Truncate base64 blobs so wire lines stay printable."""
    out = {}
    for key, value in doc.items():
        if key == "data_b64":
            out[key] = value[:24] + f"... ({len(value)} chars)"
        elif isinstance(value, dict):
            out[key] = shorten(value)
        else:
            out[key] = value
    return out


def main():
    print("== 1. registration handshake ==")
    manifest = manifest_handshake(EXE)
    print(f"{manifest['name']}@{manifest['version']}: {manifest['description']}")
    print(f"params: {[p['name'] for p in manifest['params']]}\n")

    print("== 2. one apply exchange, as it crosses the wire ==")
    quiet = AudioClip(pcm=np.array([0.1, -0.3, 0.2], dtype=np.float32))
    request = {"op": "apply", "scope": "sample", "seed": 7,
               "params": {"target_peak": 0.9},
               "payload": encode_payload(quiet)}
    print(f"-> {json.dumps(shorten(request))}")
    with ExternalProcess(EXE) as proc:
        raw = proc.request_raw(request)
        print(f"<- {json.dumps(shorten(raw))}")
        out = proc.apply("sample", 7, {"target_peak": 0.9}, quiet)
    print(f"peak before {np.abs(quiet.pcm).max():.2f}, "
          f"after {np.abs(out.pcm).max():.2f}\n")

    print("== 3. the same plugin inside a pipeline ==")
    registry = load_registry([PLUGIN_DIR])
    spec = pipeline_from_dict({
        "id": "external-demo",
        "sample": [
            {"plugin": "peak_norm", "version": "^1", "instance_id": "level"},
            {"plugin": "mfcc", "version": "^1", "instance_id": "feats"},
        ],
        "dataset": [],
        "batch": [],
    })
    validated = validate_pipeline(spec, {"level": {"target_peak": 0.5}}, registry)
    rng = np.random.default_rng(0)
    samples = [SampleRecord(sample_id=f"w/clip{i}",
                            payload=AudioClip(pcm=(0.05 * (i + 1) * rng.standard_normal(16000))
                                              .astype(np.float32)),
                            label=i % 2)
               for i in range(6)]
    out, report = run_pipeline(Dataset(samples=samples), validated,
                               SeedPolicy(master_seed=3), parallelism=2)
    shapes = {tuple(s.payload.data.shape) for s in out.samples}
    print(f"invocations: {dict(sorted(report.invocations.items()))}")
    print(f"feature shapes: {shapes}")


if __name__ == "__main__":
    main()

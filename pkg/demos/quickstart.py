#!/usr/bin/env python3
"""Minimal end-to-end walkthrough: synthesize a tiny keyword dataset,
define a pipeline, run it, and train the linear probe.

Run from the repository root after `pip install -e .`:

    python3 demos/quickstart.py
"""

import json
import math
import struct
import tempfile
import wave
from pathlib import Path

import numpy as np

from pipeforge import (
    RunConfig,
    execute_run,
    fingerprint,
    load_registry,
    pipeline_from_dict,
    validate_pipeline,
)


def write_tone(path: Path, freq: float, seed: int, sr=16000, n=16000):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / sr
    signal = 0.4 * np.sin(2 * math.pi * freq * t + rng.uniform(0, 2 * math.pi))
    signal = signal + 0.02 * rng.standard_normal(n)
    pcm = np.clip(signal * 32768.0, -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(sr)
        fh.writeframes(pcm.tobytes())


def build_dataset(root: Path):
    """Four 'words', each a distinct tone family, plus background noise."""
    words = {"yes": 450.0, "no": 1100.0, "go": 1900.0, "stop": 3100.0}
    for word, freq in words.items():
        d = root / word
        d.mkdir(parents=True)
        for i in range(12):
            write_tone(d / f"spk{i:03d}_nohash_0.wav", freq + 3 * i, seed=i)
    noise = root / "_background_noise_"
    noise.mkdir()
    write_tone(noise / "hum.wav", 60.0, seed=99, n=48000)
    return root


PIPELINE = {
    "id": "quickstart",
    "sample": [
        {"plugin": "pad_trim", "version": "^1", "instance_id": "pad"},
        {"plugin": "time_shift", "version": "^1", "instance_id": "shift"},
        {"plugin": "mfcc", "version": "^1", "instance_id": "feats"},
    ],
    "dataset": [
        {"plugin": "mean_std_normalize", "version": "^1", "instance_id": "norm"},
    ],
    "batch": [],
}

PARAMS = {
    "pad": {"target_len": 16000},
    "shift": {"max_shift_ms": 40.0},
    "feats": {"n_mfcc": 10},
}


def main():
    with tempfile.TemporaryDirectory() as tmp:
        root = build_dataset(Path(tmp) / "speech")

        registry = load_registry()
        print(f"registry holds {len(registry)} plugin versions")

        spec = pipeline_from_dict(PIPELINE)
        validated = validate_pipeline(spec, PARAMS, registry)
        print(f"pipeline fingerprint: {fingerprint(validated)}")
        for instance_id, in_kind, out_kind in validated.chaining_proof():
            print(f"  {instance_id}: {in_kind} -> {out_kind}")

        config = RunConfig.from_dict({
            "pipeline": PIPELINE,
            "params": PARAMS,
            "dataset": str(root),
            "seed": 7,
            "split": {"criterion": "random_split", "validation_pct": 25.0,
                      "test_pct": 0.0},
            "probe": {"epochs": 10, "learning_rate": 0.1},
        })
        metrics = execute_run(config, registry)
        print(json.dumps(metrics, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()

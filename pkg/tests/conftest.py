"""Shared fixtures: synthetic tone datasets, external plugin executables,
and the acceptance-summary terminal hook.
"""

from __future__ import annotations

import json
import stat
import sys
import wave
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for `import oracles`

from pipeforge.registry import load_registry


# ---------------------------------------------------------------------------
# Synthetic audio
# ---------------------------------------------------------------------------


def write_tone_wav(path: Path, freq: float, seed: int, *, sr: int = 16000,
                   n: int = 16000, noise: float = 0.02, amp: float = 0.4) -> None:
    """One clip: a fixed tone plus white noise, PCM16 mono."""
    rng = np.random.default_rng(seed)
    t = np.arange(n) / sr
    phase = rng.uniform(0, 2 * np.pi)
    x = amp * np.sin(2 * np.pi * freq * t + phase)
    if noise:
        x = x + noise * rng.standard_normal(n)
    pcm = np.clip(np.round(x * 32768), -32768, 32767).astype("<i2")
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sr)
        w.writeframes(pcm.tobytes())


def build_tone_dataset(root: Path, words: dict, clips_per_word: int,
                       *, noise_clips: int = 3, seed0: int = 0) -> Path:
    """Speech-Commands-layout tree of tone clips, one speaker per clip."""
    k = seed0
    for word, freq in words.items():
        for i in range(clips_per_word):
            write_tone_wav(root / word / f"spk{i:03d}_nohash_0.wav",
                           freq + 3.0 * i, seed=k)
            k += 1
    for i in range(noise_clips):
        write_tone_wav(root / "_background_noise_" / f"hum{i}.wav",
                       60.0 + 7 * i, seed=10_000 + i, n=48000, noise=0.05, amp=0.2)
    return root


FOUR_WORDS = {"yes": 450.0, "no": 1100.0, "go": 1900.0, "stop": 3100.0}


@pytest.fixture(scope="session")
def tone_root(tmp_path_factory) -> Path:
    """Small 4-keyword set: 12 clips per word, used by engine/runner/cli tests."""
    root = tmp_path_factory.mktemp("tones") / "speech"
    return build_tone_dataset(root, FOUR_WORDS, 12)


@pytest.fixture(scope="session")
def registry():
    return load_registry()


# ---------------------------------------------------------------------------
# External plugin executables
# ---------------------------------------------------------------------------

GAIN_MANIFEST = {
    "name": "ext_gain",
    "version": "1.0.0",
    "kind": "transform",
    "scopes": ["sample", "batch"],
    "input": "any",
    "output": "any",
    "params": [{"name": "gain", "type": "float", "default": 1.0,
                "min": 0.0, "max": 10.0}],
    "description": "Multiply every value by a constant gain (test fixture).",
    "exec": {"external": "ext_gain.py"},
}

XENT_MANIFEST = {
    "name": "ext_xent",
    "version": "1.0.0",
    "kind": "loss",
    "scopes": [],
    "input": "features",
    "output": "features",
    "params": [],
    "description": "Per-row softmax cross-entropy over the wire (test fixture).",
    "exec": {"external": "ext_xent.py"},
}

TOP1_MANIFEST = {
    "name": "ext_top1",
    "version": "1.0.0",
    "kind": "accuracy",
    "scopes": [],
    "input": "features",
    "output": "features",
    "params": [],
    "description": "Exact-match fraction over the wire (test fixture).",
    "exec": {"external": "ext_top1.py"},
}

_PLUGIN_PRELUDE = """#!/usr/bin/env python3
import base64, json, math, struct, sys

MANIFEST = json.loads('''{manifest}''')

def reply(doc):
    sys.stdout.write(json.dumps(doc) + "\\n")
    sys.stdout.flush()

def run(handle):
    for line in sys.stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        if req.get("op") == "manifest":
            reply(MANIFEST)
            continue
        try:
            reply(handle(req))
        except Exception as e:
            reply({{"ok": False, "error": str(e)}})
"""

GAIN_BODY = """
def handle(req):
    if req["op"] != "apply":
        return {"ok": False, "error": "unsupported op " + str(req.get("op"))}
    payload = req["payload"]
    raw = base64.b64decode(payload["data_b64"])
    vals = list(struct.unpack("<%df" % (len(raw) // 4), raw))
    gain = float(req["params"].get("gain", 1.0))
    vals = [v * gain for v in vals]
    out = dict(payload)
    out["data_b64"] = base64.b64encode(
        struct.pack("<%df" % len(vals), *vals)).decode("ascii")
    return {"ok": True, "payload": out}

run(handle)
"""

XENT_BODY = """
def handle(req):
    if req["op"] != "loss":
        return {"ok": False, "error": "unsupported op " + str(req.get("op"))}
    logits = [float(v) for v in req["logits"]]
    label = int(req["label"])
    m = max(logits)
    exps = [math.exp(v - m) for v in logits]
    z = sum(exps)
    probs = [e / z for e in exps]
    loss = -(math.log(probs[label]))
    grad = [p - (1.0 if i == label else 0.0) for i, p in enumerate(probs)]
    return {"ok": True, "loss": loss, "grad": grad}

run(handle)
"""

TOP1_BODY = """
def handle(req):
    if req["op"] != "accuracy":
        return {"ok": False, "error": "unsupported op " + str(req.get("op"))}
    preds = req["predictions"]
    labels = req["labels"]
    hits = sum(1 for p, y in zip(preds, labels) if int(p) == int(y))
    return {"ok": True, "value": hits / len(labels)}

run(handle)
"""


def install_external_plugin(plugin_root: Path, manifest: dict, body: str) -> Path:
    """Write `<root>/<name>/<version>/{manifest.json, <exe>}`, exe bit set."""
    d = plugin_root / manifest["name"] / manifest["version"]
    d.mkdir(parents=True, exist_ok=True)
    exe = d / manifest["exec"]["external"]
    script = _PLUGIN_PRELUDE.format(manifest=json.dumps(manifest)) + body
    exe.write_text(script, encoding="utf-8")
    exe.chmod(exe.stat().st_mode | stat.S_IEXEC)
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                     encoding="utf-8")
    return exe


@pytest.fixture(scope="session")
def external_plugin_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("plugins")
    install_external_plugin(root, GAIN_MANIFEST, GAIN_BODY)
    install_external_plugin(root, XENT_MANIFEST, XENT_BODY)
    install_external_plugin(root, TOP1_MANIFEST, TOP1_BODY)
    return root


@pytest.fixture(scope="session")
def registry_with_externals(external_plugin_dir):
    return load_registry([external_plugin_dir])


# ---------------------------------------------------------------------------
# Acceptance summary: one line per criterion at the end of the run
# ---------------------------------------------------------------------------

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _ACCEPTANCE_RESULTS[name] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and (report.failed or report.skipped):
        _ACCEPTANCE_RESULTS[name] = "FAIL" if report.failed else "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        verdict = _ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{verdict}  {name}")

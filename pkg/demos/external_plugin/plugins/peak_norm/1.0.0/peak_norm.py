#!/usr/bin/env python3
"""External transform: rescale a clip to a fixed absolute peak.

This file is a complete plugin. It needs nothing beyond the Python
standard library: the host talks to it over stdin/stdout, one JSON
object per line, and audio travels as base64-encoded little-endian
float32 bytes. Any language that can do that can be a plugin.

Requests this plugin answers:

  {"op": "manifest"}
      -> the manifest JSON document itself (no envelope)
  {"op": "apply", "scope": ..., "seed": ..., "params": {...},
   "payload": {"kind": "audio", "shape": [n], "sample_rate": r,
               "data_b64": ...}}
      -> {"ok": true, "payload": {...same shape...}}

Anything else gets {"ok": false, "error": ...}.
"""

import base64
import json
import struct
import sys
from pathlib import Path

MANIFEST = json.loads(
    (Path(__file__).parent / "manifest.json").read_text(encoding="utf-8"))


def reply(doc):
    sys.stdout.write(json.dumps(doc) + "\n")
    sys.stdout.flush()


def apply(req):
    payload = req["payload"]
    if payload.get("kind") != "audio":
        return {"ok": False, "error": "peak_norm only handles audio"}
    raw = base64.b64decode(payload["data_b64"])
    vals = list(struct.unpack("<%df" % (len(raw) // 4), raw))
    peak = max((abs(v) for v in vals), default=0.0)
    target = float(req["params"].get("target_peak", 0.9))
    if peak > 0.0:
        scale = target / peak
        vals = [v * scale for v in vals]
    out = dict(payload)
    out["data_b64"] = base64.b64encode(
        struct.pack("<%df" % len(vals), *vals)).decode("ascii")
    return {"ok": True, "payload": out}


def main():
    for line in sys.stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        op = req.get("op")
        if op == "manifest":
            reply(MANIFEST)
        elif op == "apply":
            try:
                reply(apply(req))
            except Exception as e:
                reply({"ok": False, "error": str(e)})
        else:
            reply({"ok": False, "error": f"unsupported op {op!r}"})


if __name__ == "__main__":
    main()

"""External plugin processes and the newline-delimited JSON wire protocol.

One request line in, one response line out, order-preserving, over the
plugin executable's stdin/stdout. Payloads travel as base64-encoded
little-endian float32 bytes plus a shape. A plugin process is long-lived:
the engine spawns one per (plugin, worker) and serializes requests per
process.
"""

from __future__ import annotations

import base64
import json
import selectors
import subprocess
from pathlib import Path

import numpy as np

from .data import AudioClip, FeatureTensor, Payload
from .errors import PluginFailureError, ProtocolError

DEFAULT_TIMEOUT = 30.0


def encode_payload(payload: Payload) -> dict:
    if isinstance(payload, AudioClip):
        return {
            "kind": "audio",
            "shape": [int(len(payload.pcm))],
            "sample_rate": int(payload.sample_rate),
            "data_b64": base64.b64encode(
                np.ascontiguousarray(payload.pcm, dtype="<f4").tobytes()).decode("ascii"),
        }
    return {
        "kind": "tensor",
        "shape": [int(d) for d in payload.data.shape],
        "data_b64": base64.b64encode(
            np.ascontiguousarray(payload.data, dtype="<f4").tobytes()).decode("ascii"),
    }


def decode_payload(doc: object) -> Payload:
    if not isinstance(doc, dict):
        raise ProtocolError("payload must be an object")
    kind = doc.get("kind")
    shape = doc.get("shape")
    if kind not in ("audio", "tensor") or not isinstance(shape, list):
        raise ProtocolError(f"payload has invalid kind/shape: {kind!r}/{shape!r}")
    try:
        raw = base64.b64decode(doc.get("data_b64", ""), validate=True)
    except Exception as e:
        raise ProtocolError(f"payload data_b64 undecodable: {e}") from None
    data = np.frombuffer(raw, dtype="<f4")
    expect = int(np.prod([int(d) for d in shape])) if shape else 0
    if len(data) != expect:
        raise ProtocolError(
            f"payload length {len(data)} does not match shape {shape}")
    if kind == "audio":
        if len(shape) != 1:
            raise ProtocolError(f"audio payload must be rank 1, got shape {shape}")
        rate = doc.get("sample_rate")
        if not isinstance(rate, int) or rate <= 0:
            raise ProtocolError(f"audio payload has invalid sample_rate {rate!r}")
        return AudioClip(pcm=data.copy(), sample_rate=rate)
    return FeatureTensor(data.copy().reshape([int(d) for d in shape]))


class ExternalProcess:
    """One long-lived plugin process speaking the line protocol."""

    def __init__(self, exe: str | Path, timeout: float = DEFAULT_TIMEOUT):
        self.exe = str(exe)
        self.timeout = timeout
        try:
            self._proc = subprocess.Popen(
                [self.exe], stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, bufsize=1)
        except OSError as e:
            raise ProtocolError(f"cannot start plugin {self.exe}: {e}") from None
        self._selector = selectors.DefaultSelector()
        self._selector.register(self._proc.stdout, selectors.EVENT_READ)

    def request_raw(self, obj: dict) -> dict:
        """Send one request line, read back one JSON object line."""
        if self._proc.poll() is not None:
            raise ProtocolError(f"plugin {self.exe} exited with code {self._proc.returncode}")
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise ProtocolError(f"plugin {self.exe}: write failed: {e}") from None
        if not self._selector.select(timeout=self.timeout):
            self.close()
            raise ProtocolError(
                f"plugin {self.exe}: no response within {self.timeout}s")
        line = self._proc.stdout.readline()
        if not line:
            raise ProtocolError(f"plugin {self.exe}: closed its stdout")
        try:
            response = json.loads(line)
        except json.JSONDecodeError:
            raise ProtocolError(
                f"plugin {self.exe}: response is not valid JSON: {line[:200]!r}") from None
        if not isinstance(response, dict):
            raise ProtocolError(f"plugin {self.exe}: response is not a JSON object")
        return response

    def request(self, obj: dict) -> dict:
        """Send one request, expecting an ok-envelope response."""
        response = self.request_raw(obj)
        if "ok" not in response:
            raise ProtocolError(f"plugin {self.exe}: response missing 'ok' field")
        return response

    def apply(self, scope: str, seed: int, params: dict, payload: Payload) -> Payload:
        response = self.request({
            "op": "apply", "scope": scope, "seed": int(seed),
            "params": params, "payload": encode_payload(payload),
        })
        if not response["ok"]:
            raise PluginFailureError(str(response.get("error", "plugin reported failure")))
        return decode_payload(response.get("payload"))

    def loss(self, logits, label: int) -> tuple[float, list[float]]:
        response = self.request({"op": "loss", "logits": [float(x) for x in logits],
                                 "label": int(label)})
        if not response["ok"]:
            raise PluginFailureError(str(response.get("error", "plugin reported failure")))
        try:
            return float(response["loss"]), [float(g) for g in response["grad"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolError(f"plugin {self.exe}: bad loss response: {e}") from None

    def accuracy(self, predictions, labels) -> float:
        response = self.request({"op": "accuracy",
                                 "predictions": [int(p) for p in predictions],
                                 "labels": [int(y) for y in labels]})
        if not response["ok"]:
            raise PluginFailureError(str(response.get("error", "plugin reported failure")))
        try:
            return float(response["value"])
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolError(f"plugin {self.exe}: bad accuracy response: {e}") from None

    def close(self):
        try:
            self._selector.close()
        except Exception:
            pass
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except Exception:
                pass
            try:
                self._proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def manifest_handshake(exe: str | Path, timeout: float = DEFAULT_TIMEOUT) -> dict:
    """Ask an executable for its manifest (registration-time verification).

    The response line is the manifest JSON document itself.
    """
    with ExternalProcess(exe, timeout=timeout) as proc:
        return proc.request_raw({"op": "manifest"})

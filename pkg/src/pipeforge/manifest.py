"""Plugin manifests: the metadata contract every plugin ships with.

A manifest declares the plugin kind (transform / loss / accuracy / split),
the scopes a transform may run in, its data-kind signature, and a typed
parameter schema with defaults and constraints. Manifests are strict JSON
documents; unknown fields are rejected so GUI-authored typos surface early.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

from .errors import (
    InvariantError,
    ManifestSyntaxError,
    RangeViolationError,
    SchemaError,
    TypeMismatchError,
    UnknownParamError,
)

NAME_RE = re.compile(r"^[a-z][a-z0-9_-]*$")
VERSION_RE = re.compile(r"^(\d+)\.(\d+)\.(\d+)$")

KINDS = ("transform", "loss", "accuracy", "split")
SCOPES = ("sample", "dataset", "batch")
DATA_KINDS = ("audio", "frames", "spectrum", "features", "any")
PARAM_TYPES = ("int", "float", "bool", "string", "enum")

_MANIFEST_FIELDS = {
    "name", "version", "kind", "scopes", "input", "output",
    "params", "description", "exec",
}
_PARAM_FIELDS = {"name", "type", "default", "min", "max", "choices", "doc"}


def parse_version(text: str) -> tuple[int, int, int]:
    m = VERSION_RE.match(text)
    if not m:
        raise SchemaError(f"invalid version {text!r}, expected X.Y.Z")
    return (int(m.group(1)), int(m.group(2)), int(m.group(3)))


def format_version(v: tuple[int, int, int]) -> str:
    return f"{v[0]}.{v[1]}.{v[2]}"


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str
    default: object
    min: float | None = None
    max: float | None = None
    choices: tuple[str, ...] | None = None
    doc: str = ""

    def check_value(self, value, *, context: str = ""):
        """Type- and constraint-check one value, returning the normalized form."""
        where = f"{context}{self.name}"
        if self.type == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeMismatchError(
                    f"param {where}: expected int, got {value!r}")
            out = int(value)
        elif self.type == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeMismatchError(
                    f"param {where}: expected float, got {value!r}")
            out = float(value)
            if not math.isfinite(out):
                raise TypeMismatchError(f"param {where}: non-finite value")
            if out == 0.0:
                out = 0.0  # normalize -0.0
        elif self.type == "bool":
            if not isinstance(value, bool):
                raise TypeMismatchError(
                    f"param {where}: expected bool, got {value!r}")
            out = value
        elif self.type in ("string", "enum"):
            if not isinstance(value, str):
                raise TypeMismatchError(
                    f"param {where}: expected string, got {value!r}")
            out = value
        else:  # unreachable on validated specs
            raise TypeMismatchError(f"param {where}: unknown type {self.type}")

        if self.type in ("int", "float") and (self.min is not None or self.max is not None):
            lo = -math.inf if self.min is None else self.min
            hi = math.inf if self.max is None else self.max
            if not (lo <= out <= hi):
                raise RangeViolationError(
                    f"param {where}: value {out!r} outside range [{lo}, {hi}]")
        if self.type == "enum":
            if self.choices is None or out not in self.choices:
                raise RangeViolationError(
                    f"param {where}: value {out!r} not in choices {list(self.choices or ())}")
        return out

    def to_dict(self) -> dict:
        d: dict = {"name": self.name, "type": self.type, "default": self.default}
        if self.min is not None:
            d["min"] = self.min
        if self.max is not None:
            d["max"] = self.max
        if self.choices is not None:
            d["choices"] = list(self.choices)
        if self.doc:
            d["doc"] = self.doc
        return d


@dataclass(frozen=True)
class DataKind:
    tag: str
    rank: int | None = None

    def accepts(self, other: "DataKind") -> bool:
        """Chaining rule: can a payload of kind ``other`` feed this input?"""
        if self.tag == "any" or other.tag == "any":
            return True
        return self.tag == other.tag

    def to_str(self) -> str:
        return self.tag if self.rank is None else f"{self.tag}:{self.rank}"

    @classmethod
    def from_str(cls, text: str) -> "DataKind":
        tag, _, rank = text.partition(":")
        if tag not in DATA_KINDS:
            raise SchemaError(f"unknown data kind {tag!r}")
        return cls(tag, int(rank) if rank else None)


@dataclass(frozen=True)
class PluginManifest:
    name: str
    version: tuple[int, int, int]
    kind: str
    allowed_scopes: tuple[str, ...]
    input_kind: DataKind
    output_kind: DataKind
    params: tuple[ParamSpec, ...]
    description: str
    exec: dict = field(default_factory=dict)  # {"builtin": id} or {"external": path}

    @property
    def version_str(self) -> str:
        return format_version(self.version)

    def param(self, name: str) -> ParamSpec:
        for p in self.params:
            if p.name == name:
                return p
        raise UnknownParamError(f"plugin {self.name}: unknown param {name!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "version": self.version_str,
            "kind": self.kind,
            "scopes": list(self.allowed_scopes),
            "input": self.input_kind.to_str(),
            "output": self.output_kind.to_str(),
            "params": [p.to_dict() for p in self.params],
            "description": self.description,
            "exec": dict(self.exec),
        }


def parse_manifest(text: str) -> PluginManifest:
    """Parse and fully validate one manifest document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ManifestSyntaxError(f"malformed manifest JSON: {e}") from None
    return manifest_from_dict(doc)


def manifest_from_dict(doc: object) -> PluginManifest:
    if not isinstance(doc, dict):
        raise SchemaError("manifest must be a JSON object")
    missing = _MANIFEST_FIELDS - set(doc)
    if missing:
        raise SchemaError(f"manifest missing field(s): {', '.join(sorted(missing))}")
    extra = set(doc) - _MANIFEST_FIELDS
    if extra:
        raise SchemaError(f"manifest has unknown field(s): {', '.join(sorted(extra))}")

    name = doc["name"]
    if not isinstance(name, str) or not NAME_RE.match(name):
        raise SchemaError(f"invalid plugin name {name!r}")
    version = parse_version(str(doc["version"]))
    kind = doc["kind"]
    if kind not in KINDS:
        raise SchemaError(f"unknown kind {kind!r}, expected one of {list(KINDS)}")

    scopes_raw = doc["scopes"]
    if not isinstance(scopes_raw, list) or any(s not in SCOPES for s in scopes_raw):
        raise SchemaError(f"scopes must be a list drawn from {list(SCOPES)}")
    if len(set(scopes_raw)) != len(scopes_raw):
        raise SchemaError("scopes contains duplicates")
    scopes = tuple(s for s in SCOPES if s in scopes_raw)  # canonical order
    if kind == "transform" and not scopes:
        raise InvariantError("allowed_scopes: transform plugins need at least one scope")
    if kind != "transform" and scopes:
        raise InvariantError(f"allowed_scopes: kind={kind} plugins must declare no scopes")

    input_kind = DataKind.from_str(str(doc["input"]))
    output_kind = DataKind.from_str(str(doc["output"]))

    params_raw = doc["params"]
    if not isinstance(params_raw, list):
        raise SchemaError("params must be a list")
    params = tuple(_parse_param(p) for p in params_raw)
    seen = set()
    for p in params:
        if p.name in seen:
            raise InvariantError(f"duplicate param name {p.name!r}")
        seen.add(p.name)
        # every default must satisfy its own constraint
        try:
            p.check_value(p.default)
        except (TypeMismatchError, RangeViolationError) as e:
            raise InvariantError(f"default for param {p.name!r} invalid: {e}") from None

    description = doc["description"]
    if not isinstance(description, str):
        raise SchemaError("description must be a string")

    exec_raw = doc["exec"]
    if (not isinstance(exec_raw, dict) or len(exec_raw) != 1
            or next(iter(exec_raw)) not in ("builtin", "external")):
        raise SchemaError('exec must be {"builtin": id} or {"external": path}')
    if not isinstance(next(iter(exec_raw.values())), str):
        raise SchemaError("exec target must be a string")

    return PluginManifest(
        name=name, version=version, kind=kind, allowed_scopes=scopes,
        input_kind=input_kind, output_kind=output_kind, params=params,
        description=description, exec=dict(exec_raw),
    )


def _parse_param(doc: object) -> ParamSpec:
    if not isinstance(doc, dict):
        raise SchemaError("param entry must be an object")
    missing = {"name", "type", "default"} - set(doc)
    if missing:
        raise SchemaError(f"param entry missing field(s): {', '.join(sorted(missing))}")
    extra = set(doc) - _PARAM_FIELDS
    if extra:
        raise SchemaError(f"param entry has unknown field(s): {', '.join(sorted(extra))}")
    name = doc["name"]
    if not isinstance(name, str) or not NAME_RE.match(name):
        raise SchemaError(f"invalid param name {name!r}")
    ptype = doc["type"]
    if ptype not in PARAM_TYPES:
        raise SchemaError(f"param {name!r}: unknown type {ptype!r}")
    pmin = doc.get("min")
    pmax = doc.get("max")
    for bound, label in ((pmin, "min"), (pmax, "max")):
        if bound is not None and (isinstance(bound, bool) or not isinstance(bound, (int, float))):
            raise SchemaError(f"param {name!r}: {label} must be a number")
    if pmin is not None and pmax is not None and pmin > pmax:
        raise InvariantError(f"param {name!r}: min {pmin} > max {pmax}")
    if (pmin is not None or pmax is not None) and ptype not in ("int", "float"):
        raise SchemaError(f"param {name!r}: min/max only valid for numeric params")
    choices = doc.get("choices")
    if ptype == "enum":
        if (not isinstance(choices, list) or not choices
                or any(not isinstance(c, str) for c in choices)):
            raise SchemaError(f"param {name!r}: enum needs a non-empty string choices list")
        choices = tuple(choices)
    elif choices is not None:
        raise SchemaError(f"param {name!r}: choices only valid for enum params")
    doc_text = doc.get("doc", "")
    if not isinstance(doc_text, str):
        raise SchemaError(f"param {name!r}: doc must be a string")
    return ParamSpec(name=name, type=ptype, default=doc["default"],
                     min=pmin, max=pmax, choices=choices, doc=doc_text)


def serialize_manifest(manifest: PluginManifest) -> str:
    """Inverse of parse_manifest (parse(serialize(m)) == m)."""
    return json.dumps(manifest.to_dict(), indent=2, ensure_ascii=False) + "\n"


def validate_params(manifest: PluginManifest, given: dict) -> dict:
    """Fill defaults and check every value; the result is total over the schema.

    Idempotent: validating an already-normalized map returns it unchanged.
    """
    known = {p.name for p in manifest.params}
    for key in given:
        if key not in known:
            raise UnknownParamError(
                f"plugin {manifest.name}: unknown param {key!r} "
                f"(known: {', '.join(sorted(known)) or 'none'})")
    out = {}
    for p in manifest.params:
        value = given.get(p.name, p.default)
        out[p.name] = p.check_value(value, context=f"{manifest.name}.")
    return out

"""Three-section pipeline specs, their parameter files, and fingerprints.

A pipeline has a sample, a dataset, and a batch section, each an ordered
list of transform references. Validation resolves every reference against
a registry, checks scopes, checks data-kind chaining across the execution
order (sample -> dataset -> batch, starting at audio for the KWS pack),
and normalizes parameters. The fingerprint is the SHA-256 digest of the
canonical serialization of the validated spec plus normalized params; the
hash algorithm is frozen for the life of the store format.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from .errors import (
    ChainError,
    DuplicateInstanceIdError,
    ManifestSyntaxError,
    ScopeError,
    SchemaError,
    UnknownInstanceError,
)
from .manifest import DataKind, PluginManifest, validate_params
from .registry import Registry, VersionReq

SECTIONS = ("sample", "dataset", "batch")


@dataclass(frozen=True)
class TransformRef:
    plugin: str
    requirement: str  # ^MAJOR[.MINOR] or =X.Y.Z
    instance_id: str


@dataclass(frozen=True)
class PipelineSpec:
    id: str
    sample_section: tuple[TransformRef, ...] = ()
    dataset_section: tuple[TransformRef, ...] = ()
    batch_section: tuple[TransformRef, ...] = ()

    def section(self, name: str) -> tuple[TransformRef, ...]:
        return getattr(self, f"{name}_section")

    def all_refs(self) -> list[tuple[str, TransformRef]]:
        return [(sec, ref) for sec in SECTIONS for ref in self.section(sec)]

    def instance_ids(self) -> list[str]:
        return [ref.instance_id for _, ref in self.all_refs()]


@dataclass(frozen=True)
class ValidatedStep:
    section: str
    ref: TransformRef
    manifest: PluginManifest
    params: dict
    in_kind: DataKind
    out_kind: DataKind


@dataclass(frozen=True)
class ValidatedPipeline:
    spec: PipelineSpec
    steps: tuple[ValidatedStep, ...]

    def section_steps(self, section: str) -> list[ValidatedStep]:
        return [s for s in self.steps if s.section == section]

    def normalized_params(self) -> dict:
        return {s.ref.instance_id: dict(s.params) for s in self.steps}

    def concrete_versions(self) -> dict:
        return {s.ref.instance_id: f"{s.manifest.name}@{s.manifest.version_str}"
                for s in self.steps}

    def chaining_proof(self) -> list[tuple[str, str, str]]:
        return [(s.ref.instance_id, s.in_kind.to_str(), s.out_kind.to_str())
                for s in self.steps]


def parse_pipeline(text: str) -> PipelineSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ManifestSyntaxError(f"malformed pipeline JSON: {e}") from None
    return pipeline_from_dict(doc)


def pipeline_from_dict(doc: object) -> PipelineSpec:
    if not isinstance(doc, dict):
        raise SchemaError("pipeline must be a JSON object")
    allowed = {"id", "sample", "dataset", "batch"}
    missing = allowed - set(doc)
    if missing:
        raise SchemaError(f"pipeline missing field(s): {', '.join(sorted(missing))}")
    extra = set(doc) - allowed
    if extra:
        raise SchemaError(f"pipeline has unknown field(s): {', '.join(sorted(extra))}")
    if not isinstance(doc["id"], str):
        raise SchemaError("pipeline id must be a string")

    sections = {}
    for sec in SECTIONS:
        entries = doc[sec]
        if not isinstance(entries, list):
            raise SchemaError(f"section {sec!r} must be a list")
        refs = []
        for entry in entries:
            if not isinstance(entry, dict):
                raise SchemaError(f"section {sec!r}: entries must be objects")
            want = {"plugin", "version", "instance_id"}
            if set(entry) != want:
                raise SchemaError(
                    f"section {sec!r}: entry needs exactly {sorted(want)}")
            if any(not isinstance(entry[k], str) for k in want):
                raise SchemaError(f"section {sec!r}: entry fields must be strings")
            VersionReq.parse(entry["version"])  # reject bad grammar at parse time
            refs.append(TransformRef(plugin=entry["plugin"],
                                     requirement=entry["version"],
                                     instance_id=entry["instance_id"]))
        sections[sec] = tuple(refs)

    spec = PipelineSpec(id=doc["id"], sample_section=sections["sample"],
                        dataset_section=sections["dataset"], batch_section=sections["batch"])
    seen = set()
    for iid in spec.instance_ids():
        if iid in seen:
            raise DuplicateInstanceIdError(f"duplicate instance_id {iid!r}")
        seen.add(iid)
    return spec


def pipeline_to_dict(spec: PipelineSpec) -> dict:
    return {
        "id": spec.id,
        **{sec: [{"plugin": r.plugin, "version": r.requirement, "instance_id": r.instance_id}
                 for r in spec.section(sec)] for sec in SECTIONS},
    }


def serialize_pipeline(spec: PipelineSpec) -> str:
    return json.dumps(pipeline_to_dict(spec), indent=2, ensure_ascii=False) + "\n"


def parse_params_file(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ManifestSyntaxError(f"malformed params JSON: {e}") from None
    if not isinstance(doc, dict) or any(not isinstance(v, dict) for v in doc.values()):
        raise SchemaError("params file must map instance_id -> param object")
    return doc


def validate_pipeline(spec: PipelineSpec, params: dict | None,
                      registry: Registry) -> ValidatedPipeline:
    """Resolve refs, enforce scope + chaining rules, normalize params."""
    params = params or {}
    known_ids = set(spec.instance_ids())
    for iid in params:
        if iid not in known_ids:
            raise UnknownInstanceError(
                f"params reference unknown instance_id {iid!r}")

    steps: list[ValidatedStep] = []
    prev_out: DataKind | None = DataKind("audio")  # KWS pack pipelines start at audio
    prev_id = "(input)"
    for section, ref in spec.all_refs():
        manifest = registry.resolve(ref.plugin, ref.requirement)
        if manifest.kind != "transform":
            raise ScopeError(
                f"section {section!r}: plugin {ref.plugin!r} has kind "
                f"{manifest.kind!r}, only transforms may appear in pipelines")
        if section not in manifest.allowed_scopes:
            raise ScopeError(
                f"section {section!r}: plugin {ref.plugin!r} only allows scopes "
                f"{list(manifest.allowed_scopes)}")
        if prev_out is not None and not manifest.input_kind.accepts(prev_out):
            raise ChainError(
                f"step {ref.instance_id!r} expects input kind "
                f"{manifest.input_kind.to_str()!r} but {prev_id!r} produces "
                f"{prev_out.to_str()!r}")
        normalized = validate_params(manifest, params.get(ref.instance_id, {}))
        # an `any` output passes the incoming kind through unchanged
        out_kind = prev_out if manifest.output_kind.tag == "any" else manifest.output_kind
        steps.append(ValidatedStep(section=section, ref=ref, manifest=manifest,
                                   params=normalized,
                                   in_kind=prev_out if manifest.input_kind.tag == "any"
                                   else manifest.input_kind,
                                   out_kind=out_kind))
        prev_out = out_kind
        prev_id = ref.instance_id
    return ValidatedPipeline(spec=spec, steps=tuple(steps))


def canonical_json(obj) -> str:
    """Canonical serialization: sorted keys, compact, shortest float repr."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False)


def fingerprint(validated: ValidatedPipeline) -> str:
    """SHA-256 hex digest of the canonical (spec + normalized params) document.

    Versions are resolved to concrete triples first, so a pipeline pinned
    by requirement hashes the same as one pinned exactly.
    """
    doc = {
        "id": validated.spec.id,
        "sections": {
            sec: [
                {
                    "plugin": s.manifest.name,
                    "version": s.manifest.version_str,
                    "instance_id": s.ref.instance_id,
                    "params": s.params,
                }
                for s in validated.section_steps(sec)
            ]
            for sec in SECTIONS
        },
    }
    return hashlib.sha256(canonical_json(doc).encode("utf-8")).hexdigest()


def move_transform(spec: PipelineSpec, from_section: str, from_index: int,
                   to_section: str, to_index: int) -> PipelineSpec:
    """Relocate one ref (drag-and-drop semantics); all other order preserved.

    The target index addresses the section as it looks after removal, so
    a move within one section to the end uses index len-1.
    """
    if from_section not in SECTIONS or to_section not in SECTIONS:
        raise IndexError(f"unknown section {from_section!r} or {to_section!r}")
    lists = {sec: list(spec.section(sec)) for sec in SECTIONS}
    src = lists[from_section]
    if not (0 <= from_index < len(src)):
        raise IndexError(
            f"from index {from_index} out of range for section {from_section!r} "
            f"of length {len(src)}")
    ref = src.pop(from_index)
    dst = lists[to_section]
    if not (0 <= to_index <= len(dst)):
        raise IndexError(
            f"to index {to_index} out of range for section {to_section!r} "
            f"of length {len(dst)}")
    dst.insert(to_index, ref)
    return replace(spec, sample_section=tuple(lists["sample"]),
                   dataset_section=tuple(lists["dataset"]),
                   batch_section=tuple(lists["batch"]))


def bind_params(spec: PipelineSpec, params: dict | None,
                overrides: list[str] | None) -> dict:
    """Apply flat ``instance_id.param=value`` overrides atop a params file.

    Precedence: override > file > manifest default (defaults are applied
    later by validate_pipeline). Values parse as JSON scalars, falling back
    to plain strings.
    """
    known = set(spec.instance_ids())
    out = {iid: dict(p) for iid, p in (params or {}).items()}
    for item in overrides or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise SchemaError(f"override {item!r} must look like instance.param=value")
        iid, dot, pname = key.partition(".")
        if not dot or not iid or not pname:
            raise SchemaError(f"override key {key!r} must look like instance.param")
        if iid not in known:
            raise UnknownInstanceError(f"override references unknown instance_id {iid!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        out.setdefault(iid, {})[pname] = value
    return out

"""Manifest parsing: strict schema, param constraints, round-trip."""

import json

import pytest

from pipeforge.errors import (
    InvariantError,
    ManifestSyntaxError,
    RangeViolationError,
    SchemaError,
    TypeMismatchError,
    UnknownParamError,
)
from pipeforge.manifest import (
    manifest_from_dict,
    parse_manifest,
    serialize_manifest,
    validate_params,
)


def base_doc(**overrides) -> dict:
    doc = {
        "name": "tweak",
        "version": "1.2.3",
        "kind": "transform",
        "scopes": ["sample"],
        "input": "audio",
        "output": "audio",
        "params": [
            {"name": "alpha", "type": "float", "default": 0.5, "min": 0.0, "max": 1.0},
            {"name": "mode", "type": "enum", "default": "soft",
             "choices": ["soft", "hard"]},
            {"name": "n", "type": "int", "default": 4, "min": 1},
            {"name": "fast", "type": "bool", "default": False},
            {"name": "tag", "type": "string", "default": ""},
        ],
        "description": "test transform",
        "exec": {"builtin": "tweak"},
    }
    doc.update(overrides)
    return doc


def test_parse_happy_path():
    m = manifest_from_dict(base_doc())
    assert m.name == "tweak"
    assert m.version == (1, 2, 3)
    assert m.version_str == "1.2.3"
    assert m.allowed_scopes == ("sample",)
    assert m.input_kind.tag == "audio"
    assert [p.name for p in m.params] == ["alpha", "mode", "n", "fast", "tag"]


def test_round_trip_identity():
    m = manifest_from_dict(base_doc())
    again = parse_manifest(serialize_manifest(m))
    assert again == m


def test_malformed_json_is_syntax_error():
    with pytest.raises(ManifestSyntaxError):
        parse_manifest("{not json")


@pytest.mark.parametrize("missing", ["name", "version", "kind", "scopes",
                                     "input", "output", "params",
                                     "description", "exec"])
def test_missing_field_rejected(missing):
    doc = base_doc()
    del doc[missing]
    with pytest.raises(SchemaError, match=missing):
        manifest_from_dict(doc)


def test_unknown_field_rejected():
    with pytest.raises(SchemaError, match="surprise"):
        manifest_from_dict(base_doc(surprise=1))


def test_bad_version_rejected():
    with pytest.raises(SchemaError):
        manifest_from_dict(base_doc(version="1.2"))


def test_unknown_kind_and_scope_rejected():
    with pytest.raises(SchemaError):
        manifest_from_dict(base_doc(kind="optimizer"))
    with pytest.raises(SchemaError):
        manifest_from_dict(base_doc(scopes=["sample", "global"]))


def test_transform_needs_scope_and_loss_must_not_have_one():
    with pytest.raises(InvariantError, match="allowed_scopes"):
        manifest_from_dict(base_doc(scopes=[]))
    with pytest.raises(InvariantError, match="allowed_scopes"):
        manifest_from_dict(base_doc(kind="loss", scopes=["sample"]))


def test_scopes_canonical_order_and_duplicates():
    m = manifest_from_dict(base_doc(scopes=["batch", "sample"]))
    assert m.allowed_scopes == ("sample", "batch")
    with pytest.raises(SchemaError, match="duplicates"):
        manifest_from_dict(base_doc(scopes=["sample", "sample"]))


def test_default_must_satisfy_own_constraints():
    bad = {"name": "alpha", "type": "float", "default": 2.0, "min": 0.0, "max": 1.0}
    with pytest.raises(InvariantError, match="default"):
        manifest_from_dict(base_doc(params=[bad]))


def test_min_above_max_rejected():
    bad = {"name": "alpha", "type": "float", "default": 0.0, "min": 1.0, "max": 0.0}
    with pytest.raises(InvariantError):
        manifest_from_dict(base_doc(params=[bad]))


def test_enum_requires_choices_and_others_reject_them():
    with pytest.raises(SchemaError):
        manifest_from_dict(base_doc(params=[
            {"name": "mode", "type": "enum", "default": "x"}]))
    with pytest.raises(SchemaError):
        manifest_from_dict(base_doc(params=[
            {"name": "n", "type": "int", "default": 1, "choices": ["a"]}]))


def test_duplicate_param_names_rejected():
    p = {"name": "alpha", "type": "float", "default": 0.5}
    with pytest.raises(InvariantError, match="duplicate"):
        manifest_from_dict(base_doc(params=[p, dict(p)]))


def test_exec_shape():
    with pytest.raises(SchemaError):
        manifest_from_dict(base_doc(exec={}))
    with pytest.raises(SchemaError):
        manifest_from_dict(base_doc(exec={"builtin": "a", "external": "b"}))
    with pytest.raises(SchemaError):
        manifest_from_dict(base_doc(exec={"script": "x"}))


# -- validate_params --------------------------------------------------------


@pytest.fixture
def manifest():
    return manifest_from_dict(base_doc())


def test_defaults_fill_in(manifest):
    out = validate_params(manifest, {})
    assert out == {"alpha": 0.5, "mode": "soft", "n": 4, "fast": False, "tag": ""}


def test_validation_is_idempotent(manifest):
    once = validate_params(manifest, {"alpha": 0.25})
    assert validate_params(manifest, once) == once


def test_unknown_param_rejected(manifest):
    with pytest.raises(UnknownParamError, match="beta"):
        validate_params(manifest, {"beta": 1})


def test_type_mismatches(manifest):
    with pytest.raises(TypeMismatchError):
        validate_params(manifest, {"alpha": "high"})
    with pytest.raises(TypeMismatchError):
        validate_params(manifest, {"n": 2.5})
    with pytest.raises(TypeMismatchError):
        validate_params(manifest, {"fast": 1})
    # bool is not an acceptable int either
    with pytest.raises(TypeMismatchError):
        validate_params(manifest, {"n": True})


def test_int_accepted_for_float_param(manifest):
    out = validate_params(manifest, {"alpha": 1})
    assert out["alpha"] == 1.0
    assert isinstance(out["alpha"], float)


def test_range_violations(manifest):
    with pytest.raises(RangeViolationError):
        validate_params(manifest, {"alpha": 1.5})
    with pytest.raises(RangeViolationError):
        validate_params(manifest, {"n": 0})
    with pytest.raises(RangeViolationError):
        validate_params(manifest, {"mode": "loud"})


def test_non_finite_float_rejected(manifest):
    with pytest.raises(TypeMismatchError):
        validate_params(manifest, {"alpha": float("nan")})


def test_error_names_offending_param(manifest):
    with pytest.raises(RangeViolationError, match=r"tweak\.alpha"):
        validate_params(manifest, {"alpha": -3.0})


def test_builtin_pack_manifests_all_parse():
    from pipeforge.registry import builtin_plugins_dir
    paths = sorted(builtin_plugins_dir().glob("*/*/manifest.json"))
    assert len(paths) >= 14
    for p in paths:
        m = parse_manifest(p.read_text(encoding="utf-8"))
        assert json.loads(serialize_manifest(m)) == m.to_dict()

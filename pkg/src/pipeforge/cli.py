"""Command-line interface.

Exit codes: 0 success, 1 validation or domain error (message on stderr),
2 usage error. Environment fallbacks: PIPEFORGE_STORE, PIPEFORGE_PLUGINS,
PIPEFORGE_PORT, PIPEFORGE_UI; explicit flags always win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import PipeforgeError, SchemaError
from .manifest import parse_manifest
from .pipeline import (
    bind_params,
    fingerprint,
    parse_params_file,
    parse_pipeline,
    validate_pipeline,
)
from .registry import Registry, load_registry
from .runner import RunConfig, execute_run, export_features, prepare_dataset
from .tracker import RunStore, compare, expand_sweep


def _plugin_dirs(arg: str | None) -> list[str]:
    raw = arg if arg is not None else os.environ.get("PIPEFORGE_PLUGINS", "")
    return [p for p in raw.split(":") if p]


def _registry(args) -> Registry:
    return load_registry(_plugin_dirs(getattr(args, "plugins", None)))


def _store(args) -> RunStore:
    root = getattr(args, "store", None) or os.environ.get("PIPEFORGE_STORE")
    if not root:
        raise SchemaError("no run store: pass --store or set PIPEFORGE_STORE")
    return RunStore(root)


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_json_arg(value: str) -> dict:
    """Accept inline JSON or a path to a JSON file."""
    text = value
    if not value.lstrip().startswith("{"):
        text = _read(value)
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise SchemaError("expected a JSON object")
    return doc


# -- subcommand handlers -----------------------------------------------------


def cmd_plugins_list(args) -> int:
    registry = _registry(args)
    for manifest in registry.catalog():
        scopes = ",".join(manifest.allowed_scopes) or "-"
        print(f"{manifest.name}@{manifest.version_str}  {manifest.kind}"
              f"  [{scopes}]  {manifest.description}")
    return 0


def cmd_plugins_validate(args) -> int:
    manifest = parse_manifest(_read(args.manifest))
    print(f"valid: {manifest.name}@{manifest.version_str} ({manifest.kind})")
    return 0


def _validated_from_args(args, registry: Registry):
    spec = parse_pipeline(_read(args.spec))
    params = parse_params_file(_read(args.params)) if args.params else {}
    bound = bind_params(spec, params, getattr(args, "set", None))
    return spec, validate_pipeline(spec, bound, registry)


def cmd_pipeline_validate(args) -> int:
    _, validated = _validated_from_args(args, _registry(args))
    print(f"valid: {fingerprint(validated)}")
    return 0


def cmd_pipeline_fingerprint(args) -> int:
    _, validated = _validated_from_args(args, _registry(args))
    print(fingerprint(validated))
    return 0


def _run_config_from_args(args, registry: Registry) -> RunConfig:
    spec = parse_pipeline(_read(args.pipeline))
    params = parse_params_file(_read(args.params)) if args.params else {}
    bound = bind_params(spec, params, getattr(args, "set", None))
    doc = {
        "dataset": args.dataset,
        "seed": args.seed,
        "jobs": args.jobs,
        "params": bound,
    }
    if args.keywords:
        doc["keywords"] = [w for w in args.keywords.split(",") if w]
    if getattr(args, "split", None):
        doc["split"] = _load_json_arg(args.split)
    probe = {}
    for flag in ("learning_rate", "epochs", "batch_size"):
        value = getattr(args, flag, None)
        if value is not None:
            probe[flag] = value
    if probe:
        doc["probe"] = probe
    if getattr(args, "loss", None):
        doc["loss"] = args.loss
    if getattr(args, "accuracy", None):
        doc["accuracy"] = args.accuracy
    return RunConfig.from_dict(doc, pipeline=spec)


def cmd_preprocess(args) -> int:
    registry = _registry(args)
    config = _run_config_from_args(args, registry)
    validated = validate_pipeline(config.pipeline, config.params, registry)
    data = prepare_dataset(config, registry)
    from .engine import SeedPolicy, run_pipeline
    out, _report = run_pipeline(data, validated, SeedPolicy(config.seed),
                                parallelism=config.jobs)
    written = export_features(out, args.out)
    print(fingerprint(validated))
    print(f"wrote {len(written)} feature files to {args.out}")
    return 0


def cmd_run(args) -> int:
    registry = _registry(args)
    config = _run_config_from_args(args, registry)
    store = _store(args)
    metrics = execute_run(config, registry, store=store)
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    registry = _registry(args)
    template = _load_json_arg(args.template)
    grid = _load_json_arg(args.grid)
    base_config = RunConfig.from_dict(template)
    points = expand_sweep(base_config.pipeline, base_config.params, grid, registry)
    store = _store(args)
    failures = 0
    for point in points:
        doc = dict(template)
        doc["params"] = point.params
        config = RunConfig.from_dict(doc, pipeline=base_config.pipeline)
        coords = json.dumps(point.coords, sort_keys=True)
        try:
            metrics = execute_run(config, registry, store=store)
            print(f"{metrics['run_id']}  {coords}  "
                  f"val_accuracy={metrics.get('val_accuracy', float('nan')):.4f}")
        except PipeforgeError as e:
            failures += 1
            print(f"failed  {coords}  {e}", file=sys.stderr)
    print(f"{len(points) - failures}/{len(points)} sweep points done")
    return 1 if failures else 0


def cmd_compare(args) -> int:
    store = _store(args)
    run_ids = [r for r in args.runs.split(",") if r]
    records = [store.get(run_id) for run_id in run_ids]
    report = compare(records, args.metric)
    if args.format == "csv":
        sys.stdout.write(report.render_csv())
    else:
        sys.stdout.write(report.render_text())
    return 0


def _resolve_ui_dir(flag: str | None) -> str | None:
    ui_dir = flag or os.environ.get("PIPEFORGE_UI")
    if ui_dir:
        return ui_dir
    fallback = Path("frontend") / "dist"  # conventional build output
    return str(fallback) if fallback.is_dir() else None


def _service_config_from_args(args):
    from .service import ServiceConfig

    port = args.port
    if port is None:
        port = int(os.environ.get("PIPEFORGE_PORT", "8765"))
    store_root = args.store or os.environ.get("PIPEFORGE_STORE")
    if not store_root:
        raise SchemaError("no run store: pass --store or set PIPEFORGE_STORE")
    return ServiceConfig(
        port=port, store_root=store_root,
        plugin_dirs=_plugin_dirs(args.plugins),
        dataset_roots=[d for d in (args.datasets or "").split(":") if d],
        workers=args.workers,
        ui_dir=_resolve_ui_dir(args.ui))


def cmd_serve(args) -> int:
    from .service import serve

    serve(_service_config_from_args(args))
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pipeforge",
        description="Plugin-based preprocessing pipelines for keyword spotting")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_plugins_flag(p):
        p.add_argument("--plugins", help="colon-separated plugin directories "
                       "(default: $PIPEFORGE_PLUGINS plus built-ins)")

    p = sub.add_parser("plugins", help="inspect the plugin registry")
    psub = p.add_subparsers(dest="plugins_command", required=True)
    q = psub.add_parser("list", help="print the catalog")
    add_plugins_flag(q)
    q.set_defaults(handler=cmd_plugins_list)
    q = psub.add_parser("validate", help="validate one manifest file")
    q.add_argument("manifest")
    q.set_defaults(handler=cmd_plugins_validate)

    p = sub.add_parser("pipeline", help="validate or fingerprint a pipeline spec")
    psub = p.add_subparsers(dest="pipeline_command", required=True)
    for name, handler in (("validate", cmd_pipeline_validate),
                          ("fingerprint", cmd_pipeline_fingerprint)):
        q = psub.add_parser(name)
        q.add_argument("spec", help="pipeline JSON file")
        q.add_argument("--params", help="params JSON file")
        q.add_argument("--set", action="append", default=[],
                       help="override: instance_id.param=value (repeatable)")
        add_plugins_flag(q)
        q.set_defaults(handler=handler)

    def add_run_io(q, with_probe: bool):
        q.add_argument("--pipeline", required=True, help="pipeline JSON file")
        q.add_argument("--params", help="params JSON file")
        q.add_argument("--set", action="append", default=[],
                       help="override: instance_id.param=value (repeatable)")
        q.add_argument("--dataset", required=True, help="dataset directory")
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--jobs", type=int, default=1)
        q.add_argument("--keywords", help="comma-separated keyword list")
        q.add_argument("--split", help="split config JSON (inline or file)")
        add_plugins_flag(q)
        if with_probe:
            q.add_argument("--learning-rate", type=float, dest="learning_rate")
            q.add_argument("--epochs", type=int)
            q.add_argument("--batch-size", type=int, dest="batch_size")
            q.add_argument("--loss", help="loss plugin name")
            q.add_argument("--accuracy", help="accuracy plugin name")

    q = sub.add_parser("preprocess", help="run the pipeline and export features")
    add_run_io(q, with_probe=False)
    q.add_argument("--out", required=True, help="output directory")
    q.set_defaults(handler=cmd_preprocess)

    q = sub.add_parser("run", help="preprocess, train the probe, record the run")
    add_run_io(q, with_probe=True)
    q.add_argument("--store", help="run store directory (default: $PIPEFORGE_STORE)")
    q.set_defaults(handler=cmd_run)

    q = sub.add_parser("sweep", help="expand a parameter grid into recorded runs")
    q.add_argument("--template", required=True,
                   help="run config JSON (inline or file) with pipeline+dataset")
    q.add_argument("--grid", required=True,
                   help='grid JSON: {"instance.param": [values, ...]}')
    q.add_argument("--store", help="run store directory (default: $PIPEFORGE_STORE)")
    add_plugins_flag(q)
    q.set_defaults(handler=cmd_sweep)

    q = sub.add_parser("compare", help="tabulate recorded runs by one metric")
    q.add_argument("--runs", required=True, help="comma-separated run ids")
    q.add_argument("--metric", required=True)
    q.add_argument("--format", choices=("text", "csv"), default="text")
    q.add_argument("--store", help="run store directory (default: $PIPEFORGE_STORE)")
    q.set_defaults(handler=cmd_compare)

    q = sub.add_parser("serve", help="start the HTTP service")
    q.add_argument("--port", type=int, help="default: $PIPEFORGE_PORT or 8765")
    q.add_argument("--store", help="run store directory (default: $PIPEFORGE_STORE)")
    q.add_argument("--plugins", help="colon-separated plugin directories")
    q.add_argument("--datasets", help="colon-separated dataset directories")
    q.add_argument("--workers", type=int, default=2, help="run worker count")
    q.add_argument("--ui", help="static UI directory served at /ui/ "
                   "(default: $PIPEFORGE_UI, else ./frontend/dist if present)")
    q.set_defaults(handler=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except PipeforgeError as e:
        print(f"error ({e.kind}): {e}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

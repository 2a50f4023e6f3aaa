"""One place that turns a run request into metrics.

Both the CLI and the HTTP service funnel through execute_run so they cannot
drift: ingest and label the dataset, assign splits, run the validated
pipeline, train the probe with the batch section applied per epoch, and
evaluate with the configured accuracy plugin.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dataset as ds
from .builtins import BUILTIN_SPLITS, get_builtin
from .data import Dataset
from .engine import ExternalSet, SeedPolicy, run_pipeline
from .errors import (
    EmptySplitError,
    NotFoundError,
    PipeforgeError,
    SchemaError,
)
from .external import ExternalProcess
from .manifest import validate_params
from .pipeline import (
    PipelineSpec,
    ValidatedPipeline,
    fingerprint,
    pipeline_from_dict,
    validate_pipeline,
)
from .probe import TrainConfig, evaluate, split_view, train_probe
from .registry import Registry
from .seeding import derive_seed
from .tracker import RunStore

DEFAULT_KEYWORDS = ["yes", "no", "go", "stop"]


@dataclass
class RunConfig:
    """Everything needed to execute one run, JSON-shaped."""

    pipeline: PipelineSpec
    params: dict
    dataset_root: str
    seed: int = 0
    keywords: list = field(default_factory=lambda: list(DEFAULT_KEYWORDS))
    split: dict = field(default_factory=lambda: {"criterion": "stable_hash"})
    probe: dict = field(default_factory=dict)
    loss: str = "cross_entropy"
    accuracy: str = "top1_accuracy"
    jobs: int = 1

    @classmethod
    def from_dict(cls, doc: dict, *, pipeline: PipelineSpec | None = None) -> "RunConfig":
        if not isinstance(doc, dict):
            raise SchemaError("run config must be a JSON object")
        if pipeline is None:
            raw = doc.get("pipeline")
            if raw is None:
                raise SchemaError("run config needs a pipeline")
            pipeline = pipeline_from_dict(raw)
        known = {"pipeline", "params", "dataset", "seed", "keywords", "split",
                 "probe", "loss", "accuracy", "jobs"}
        extra = set(doc) - known
        if extra:
            raise SchemaError(f"run config has unknown field(s): {', '.join(sorted(extra))}")
        dataset_root = doc.get("dataset")
        if not isinstance(dataset_root, str) or not dataset_root:
            raise SchemaError("run config needs a dataset")
        seed = doc.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise SchemaError("seed must be a non-negative integer")
        keywords = doc.get("keywords", list(DEFAULT_KEYWORDS))
        if (not isinstance(keywords, list) or not keywords
                or any(not isinstance(k, str) for k in keywords)):
            raise SchemaError("keywords must be a non-empty list of words")
        split = doc.get("split", {"criterion": "stable_hash"})
        if not isinstance(split, dict) or not isinstance(
                split.get("criterion", "stable_hash"), str):
            raise SchemaError("split must be an object with a criterion name")
        probe = doc.get("probe", {})
        if not isinstance(probe, dict):
            raise SchemaError("probe must be an object")
        for fname, typ in (("learning_rate", (int, float)), ("epochs", int),
                           ("batch_size", int)):
            if fname in probe and (isinstance(probe[fname], bool)
                                   or not isinstance(probe[fname], typ)):
                raise SchemaError(f"probe.{fname} has the wrong type")
        jobs = doc.get("jobs", 1)
        if isinstance(jobs, bool) or not isinstance(jobs, int) or jobs < 1:
            raise SchemaError("jobs must be a positive integer")
        return cls(pipeline=pipeline, params=doc.get("params") or {},
                   dataset_root=dataset_root, seed=seed, keywords=keywords,
                   split=dict(split), probe=dict(probe),
                   loss=doc.get("loss", "cross_entropy"),
                   accuracy=doc.get("accuracy", "top1_accuracy"), jobs=jobs)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=float(self.probe.get("learning_rate", 0.05)),
            epochs=int(self.probe.get("epochs", 30)),
            batch_size=int(self.probe.get("batch_size", 32)),
            master_seed=derive_seed(self.seed, "probe"))


def resolve_loss(registry: Registry, name: str):
    """Loss plugin -> fn(logits [N,C], labels [N]) -> (loss, grad/N)."""
    manifest = registry.resolve(name, "^1")
    if manifest.kind != "loss":
        raise NotFoundError(f"plugin {name} is a {manifest.kind}, not a loss")
    params = validate_params(manifest, {})
    if "builtin" in manifest.exec:
        impl = get_builtin("loss", manifest.exec["builtin"])
        return lambda logits, labels: impl(logits, labels, params), None
    proc = ExternalProcess(manifest.exec["external"])

    def fn(logits, labels):
        n = len(labels)
        losses = np.zeros(n)
        grads = np.zeros_like(np.asarray(logits, dtype=np.float64))
        for i in range(n):
            loss, grad = proc.loss([float(v) for v in logits[i]], int(labels[i]))
            losses[i] = loss
            grads[i] = grad
        return float(losses.mean()), grads / n
    return fn, proc


def resolve_accuracy(registry: Registry, name: str):
    """Accuracy plugin -> fn(logits [N,C], labels [N]) -> float."""
    manifest = registry.resolve(name, "^1")
    if manifest.kind != "accuracy":
        raise NotFoundError(f"plugin {name} is a {manifest.kind}, not an accuracy")
    params = validate_params(manifest, {})
    if "builtin" in manifest.exec:
        impl = get_builtin("accuracy", manifest.exec["builtin"])
        return lambda logits, labels: impl(logits, labels, params), None
    proc = ExternalProcess(manifest.exec["external"])

    def fn(logits, labels):
        pred = np.argmax(np.asarray(logits), axis=1)
        return proc.accuracy([int(p) for p in pred], [int(y) for y in labels])
    return fn, proc


def apply_configured_split(data: Dataset, split: dict, seed: int,
                           registry: Registry) -> Dataset:
    """Assign splits using the named split plugin and its validated params."""
    criterion = split.get("criterion", "stable_hash")
    manifest = registry.resolve(criterion, "^1")
    if manifest.kind != "split":
        raise NotFoundError(f"plugin {criterion} is a {manifest.kind}, not a split")
    given = {k: v for k, v in split.items() if k != "criterion"}
    params = validate_params(manifest, given)
    impl = BUILTIN_SPLITS[manifest.exec["builtin"]]
    kwargs = {}
    if criterion == "list_file":
        config = ds.SplitConfig()
        kwargs = {"validation_list": params["validation_list"],
                  "test_list": params["test_list"]}
    else:
        config = ds.SplitConfig(validation_pct=params["validation_pct"],
                                test_pct=params["test_pct"])
    out = data.shallow_copy()
    out.splits = impl(data, config, derive_seed(seed, "split"), **kwargs)
    return out


def prepare_dataset(config: RunConfig, registry: Registry) -> Dataset:
    """Ingest, label through the class map, and split."""
    data = ds.ingest_dataset(config.dataset_root)
    class_map = ds.build_class_map(config.keywords)
    data = ds.apply_class_map(data, class_map)
    return apply_configured_split(data, config.split, config.seed, registry)


def enqueue_run(config: RunConfig, registry: Registry, store: RunStore,
                run_id: str | None = None):
    """Validate and durably record a queued run (the POST /api/runs path)."""
    validated = validate_pipeline(config.pipeline, config.params, registry)
    return store.create_run(
        fingerprint=fingerprint(validated),
        versions=validated.concrete_versions(),
        params=validated.normalized_params(), seed=config.seed,
        dataset=config.dataset_root, run_id=run_id)


def execute_recorded(config: RunConfig, registry: Registry, store: RunStore,
                     run_id: str) -> dict:
    """Drive an already-queued record to done or failed; returns metrics."""
    try:
        validated = validate_pipeline(config.pipeline, config.params, registry)
        data = prepare_dataset(config, registry)
        store.update_status(run_id, "running", dataset=ds.dataset_digest(data))
        metrics, log_lines = _run_measured(config, validated, data, registry)
    except Exception as e:
        if store.get(run_id).status == "queued":
            store.update_status(run_id, "running")
        store.append_log(run_id, f"error: {e}")
        store.update_status(run_id, "failed", error=str(e))
        raise
    for line in log_lines:
        store.append_log(run_id, line)
    store.set_metrics(run_id, metrics)
    store.update_status(run_id, "done")
    metrics = dict(metrics)
    metrics["run_id"] = run_id  # convenience for callers
    return metrics


def execute_run(config: RunConfig, registry: Registry,
                store: RunStore | None = None,
                run_id: str | None = None) -> dict:
    """Run end to end; returns the metrics map. Records to the store if given."""
    if store is None:
        validated = validate_pipeline(config.pipeline, config.params, registry)
        data = prepare_dataset(config, registry)
        metrics, _ = _run_measured(config, validated, data, registry)
        return metrics
    record = enqueue_run(config, registry, store, run_id=run_id)
    return execute_recorded(config, registry, store, record.run_id)


def _run_measured(config: RunConfig, validated: ValidatedPipeline,
                  data: Dataset, registry: Registry) -> tuple[dict, list[str]]:
    started = time.perf_counter()
    batch_steps = validated.section_steps("batch")
    policy = SeedPolicy(master_seed=config.seed)
    out, report = run_pipeline(data, validated, policy,
                               parallelism=config.jobs)

    loss_fn, loss_proc = resolve_loss(registry, config.loss)
    accuracy_fn, acc_proc = resolve_accuracy(registry, config.accuracy)
    try:
        train = split_view(out, "train")
        val = split_view(out, "validation")
        if not train.samples:
            raise EmptySplitError("training split is empty after preprocessing")
        if not val.samples:
            raise EmptySplitError("validation split is empty after preprocessing")
        model, history = train_probe(
            train, config.train_config(), loss_fn,
            batch_steps=batch_steps,
            n_classes=out.class_map.n_classes if out.class_map else None)
        train_acc, _ = evaluate(model, train, accuracy_fn)
        val_acc, confusion = evaluate(model, val, accuracy_fn)
        # wall time goes to the log, not metrics: metrics must be identical
        # across reruns with one seed
        metrics = {
            "final_train_loss": history[-1] if history else 0.0,
            "train_accuracy": train_acc,
            "val_accuracy": val_acc,
            "n_train": float(len(train.samples)),
            "n_validation": float(len(val.samples)),
        }
        test = split_view(out, "test")
        if test.samples:
            test_acc, _ = evaluate(model, test, accuracy_fn)
            metrics["test_accuracy"] = test_acc
        log_lines = [
            "loss history: " + json.dumps([round(h, 6) for h in history]),
            "confusion (validation): " + json.dumps(confusion.tolist()),
            "execution report: " + json.dumps(report.to_dict()),
            f"wall seconds: {time.perf_counter() - started:.3f}",
        ]
        return metrics, log_lines
    finally:
        for proc in (loss_proc, acc_proc):
            if proc is not None:
                proc.close()


# ---------------------------------------------------------------------------
# Feature export (the `preprocess` flow)
# ---------------------------------------------------------------------------


def _export_name(sample_id: str) -> str:
    return sample_id.replace("/", "__") + ".bin"


def export_features(data: Dataset, out_dir: str | Path) -> list[str]:
    """Write one binary file per sample plus an index.tsv.

    Per-sample format: a UTF-8 header line
    {"shape": [...], "dtype": "f32le", "sample_id": "..."} followed by the
    raw little-endian float32 payload. Returns the written file names.
    """
    from .data import payload_bytes

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_id = {s.sample_id: s for s in data.samples}
    written = []
    index_lines = []
    for sid in data.sorted_ids():
        sample = by_id[sid]
        arr = (sample.payload.pcm if hasattr(sample.payload, "pcm")
               else sample.payload.data)
        header = json.dumps(
            {"shape": list(arr.shape), "dtype": "f32le", "sample_id": sid},
            sort_keys=True)
        name = _export_name(sid)
        with open(out_dir / name, "wb") as fh:
            fh.write(header.encode("utf-8") + b"\n")
            fh.write(payload_bytes(sample.payload))
        written.append(name)
        index_lines.append(f"{sid}\t{sample.label}\t{data.splits.get(sid, '')}")
    (out_dir / "index.tsv").write_text("\n".join(index_lines) + "\n",
                                       encoding="utf-8")
    return written


def read_exported_feature(path: str | Path) -> tuple[dict, "np.ndarray"]:
    """Parse one exported feature file back into (header, array)."""
    raw = Path(path).read_bytes()
    newline = raw.index(b"\n")
    header = json.loads(raw[:newline].decode("utf-8"))
    arr = np.frombuffer(raw[newline + 1:], dtype="<f4").reshape(header["shape"])
    return header, arr

"""Pipeline execution: parallel sample stage, sequential dataset stage, and
the per-epoch batch iterator.

Determinism contract: output bytes depend only on (dataset, validated
pipeline, normalized params, master seed). Sample seeds key off the sample's
rank in sorted sample_id order, so scheduling and worker count can never
change a result; each step within a section draws from its own substream.
"""

from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .builtins import ExecContext, get_builtin
from .data import AudioClip, Batch, Dataset, FeatureTensor, Payload, as_tensor_rows
from .errors import (
    KindError,
    PipeforgeError,
    PluginFailureError,
    ShapeError,
)
from .external import ExternalProcess
from .manifest import PluginManifest
from .pipeline import ValidatedPipeline, ValidatedStep
from .seeding import derive_seed, rng_from_seed, substream


@dataclass(frozen=True)
class SeedPolicy:
    """Master seed plus the frozen coordinate->seed derivation."""
    master_seed: int

    def seed_for(self, stage_tag: str, epoch: int = 0, batch_index: int = 0,
                 sample_index: int = 0) -> int:
        return derive_seed(self.master_seed, stage_tag, epoch, batch_index,
                           sample_index)


@dataclass
class ExecutionReport:
    stage_seconds: dict = field(default_factory=dict)
    sample_counts: dict = field(default_factory=dict)
    invocations: Counter = field(default_factory=Counter)
    failures: list = field(default_factory=list)  # (sample_id, message)
    cache_hits: int = 0

    def to_dict(self) -> dict:
        return {
            "stage_seconds": {k: round(v, 6) for k, v in self.stage_seconds.items()},
            "sample_counts": dict(self.sample_counts),
            "invocations": dict(self.invocations),
            "failures": list(self.failures),
            "cache_hits": self.cache_hits,
        }


class ExternalSet:
    """Lazy per-worker collection of live external plugin processes.

    One engine worker owns one set; requests on a process are serialized by
    construction, and the seed travels in each request, so which worker
    serves a sample cannot affect the result.
    """

    def __init__(self):
        self._procs: dict[str, ExternalProcess] = {}

    def process_for(self, manifest: PluginManifest) -> ExternalProcess:
        exe = manifest.exec["external"]
        proc = self._procs.get(exe)
        if proc is None:
            proc = ExternalProcess(exe)
            self._procs[exe] = proc
        return proc

    def close(self):
        for proc in self._procs.values():
            proc.close()
        self._procs.clear()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _check_output_kind(payload: Payload, step: ValidatedStep) -> None:
    # runtime payloads are audio or tensor; frames/spectrum/features all
    # materialize as tensors
    tag = step.out_kind.tag
    if tag == "any":
        return
    want_audio = tag == "audio"
    if want_audio != isinstance(payload, AudioClip):
        raise KindError(
            f"step {step.ref.instance_id} ({step.manifest.name}) declared output "
            f"{tag!r} but produced {payload.kind!r}")


def apply_sample_step(step: ValidatedStep, payload: Payload, seed: int,
                      ctx: ExecContext, externals: ExternalSet) -> Payload:
    """One transform on one payload; raises PluginFailure on plugin errors."""
    if "builtin" in step.manifest.exec:
        impl = get_builtin("transform", step.manifest.exec["builtin"]).impl_for("sample")
        out = impl(payload, step.params, rng_from_seed(seed), ctx)
    else:
        proc = externals.process_for(step.manifest)
        out = proc.apply("sample", seed, step.params, payload)
    _check_output_kind(out, step)
    return out


def run_sample_stage(dataset: Dataset, steps: Sequence[ValidatedStep],
                     seed_policy: SeedPolicy, parallelism: int = 1,
                     on_error: str = "raise",
                     report: ExecutionReport | None = None) -> Dataset:
    """Apply the sample section to every sample, in parallel chunks.

    on_error="raise" aborts on the first failure; "skip" drops the failing
    sample, records (sample_id, message) in the report, and leaves every
    other sample's output untouched.
    """
    report = report if report is not None else ExecutionReport()
    started = time.perf_counter()
    out = dataset.shallow_copy()
    order = dataset.sorted_ids()
    rank = {sid: i for i, sid in enumerate(order)}
    ctx = ExecContext(noise_bank=tuple(dataset.noise_bank))

    def work(sample, externals: ExternalSet) -> Payload:
        seed = seed_policy.seed_for("sample", sample_index=rank[sample.sample_id])
        payload = sample.payload
        for j, step in enumerate(steps):
            try:
                payload = apply_sample_step(
                    step, payload, substream(seed, j), ctx, externals)
            except KindError:
                raise
            except PipeforgeError as e:
                raise PluginFailureError(
                    f"plugin {step.manifest.name} failed on sample "
                    f"{sample.sample_id}: {e}") from e
            except Exception as e:
                raise PluginFailureError(
                    f"plugin {step.manifest.name} failed on sample "
                    f"{sample.sample_id}: {e!r}") from e
        return payload

    results: dict[str, Payload] = {}
    failures: dict[str, str] = {}

    def run_chunk(chunk):
        # one worker = one chunk = one set of long-lived external processes
        with ExternalSet() as externals:
            for s in chunk:
                try:
                    results[s.sample_id] = work(s, externals)
                except KindError:
                    raise
                except PluginFailureError as e:
                    if on_error == "raise":
                        raise
                    failures[s.sample_id] = str(e)

    if steps:
        ordered = sorted(out.samples, key=lambda s: s.sample_id)
        if parallelism <= 1 or len(ordered) <= 1:
            run_chunk(ordered)
        else:
            # contiguous chunks; seeds come from global rank so the split
            # points cannot influence any output
            size = (len(ordered) + parallelism - 1) // parallelism
            chunks = [ordered[i:i + size] for i in range(0, len(ordered), size)]
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                for f in [pool.submit(run_chunk, c) for c in chunks]:
                    f.result()
        out.samples = [s.with_payload(results[s.sample_id])
                       for s in out.samples if s.sample_id in results]
        for st in steps:
            report.invocations[f"{st.manifest.name}@{st.manifest.version_str}"] += len(results)
    report.failures.extend(sorted(failures.items()))
    report.stage_seconds["sample"] = time.perf_counter() - started
    report.sample_counts["sample"] = len(out.samples)
    return out


def run_dataset_stage(dataset: Dataset, steps: Sequence[ValidatedStep],
                      seed_policy: SeedPolicy,
                      report: ExecutionReport | None = None) -> Dataset:
    """Apply dataset-scope transforms sequentially, each seeing the whole set."""
    report = report if report is not None else ExecutionReport()
    started = time.perf_counter()
    out = dataset
    for j, step in enumerate(steps):
        seed = seed_policy.seed_for("dataset", sample_index=j)
        impl = get_builtin("transform", step.manifest.exec["builtin"]).impl_for("dataset")
        try:
            out = impl(out, step.params, seed)
        except KindError:
            raise
        except PipeforgeError as e:
            raise PluginFailureError(
                f"plugin {step.manifest.name} failed on the dataset stage: {e}") from e
        except Exception as e:
            raise PluginFailureError(
                f"plugin {step.manifest.name} failed on the dataset stage: {e!r}") from e
        report.invocations[f"{step.manifest.name}@{step.manifest.version_str}"] += 1
    report.stage_seconds["dataset"] = time.perf_counter() - started
    report.sample_counts["dataset"] = len(out.samples)
    return out


def apply_batch_steps(rows: np.ndarray, steps: Sequence[ValidatedStep],
                      base_seed: int, ctx: ExecContext,
                      externals: ExternalSet) -> np.ndarray:
    for j, step in enumerate(steps):
        seed = substream(base_seed, j)
        before = rows.shape
        if "builtin" in step.manifest.exec:
            impl = get_builtin("transform", step.manifest.exec["builtin"]).impl_for("batch")
            try:
                rows = impl(rows, step.params, rng_from_seed(seed), ctx)
            except KindError:
                raise
            except PipeforgeError as e:
                raise PluginFailureError(
                    f"plugin {step.manifest.name} failed on a batch: {e}") from e
            except Exception as e:
                raise PluginFailureError(
                    f"plugin {step.manifest.name} failed on a batch: {e!r}") from e
        else:
            proc = externals.process_for(step.manifest)
            out = proc.apply("batch", seed, step.params, FeatureTensor(data=rows))
            if not isinstance(out, FeatureTensor):
                raise KindError(
                    f"batch step {step.ref.instance_id} returned {out.kind}, "
                    f"expected a tensor")
            rows = out.data
        if rows.shape[0] != before[0]:
            raise ShapeError(
                f"batch step {step.ref.instance_id} changed the batch size "
                f"from {before[0]} to {rows.shape[0]}")
    return rows


def iterate_batches(dataset: Dataset, batch_size: int, epoch: int,
                    shuffle: bool, steps: Sequence[ValidatedStep],
                    seed_policy: SeedPolicy,
                    externals: ExternalSet | None = None) -> Iterator[Batch]:
    """Deterministic batches for one epoch; batch transforms re-drawn each call.

    The shuffle permutation is a pure function of (master, epoch); batch
    transform randomness of (master, epoch, batch index, step index).
    """
    if batch_size < 1:
        raise ShapeError(f"batch_size must be positive, got {batch_size}")
    rows = as_tensor_rows(dataset)
    by_id = {s.sample_id: s for s in dataset.samples}
    order = dataset.sorted_ids()
    labels = np.asarray([by_id[sid].label for sid in order])
    n = len(order)
    indices = np.arange(n)
    if shuffle:
        perm_rng = rng_from_seed(seed_policy.seed_for("shuffle", epoch=epoch))
        indices = perm_rng.permutation(n)
    ctx = ExecContext(noise_bank=tuple(dataset.noise_bank))
    own_externals = externals is None
    externals = externals if externals is not None else ExternalSet()
    try:
        for b, start in enumerate(range(0, n, batch_size)):
            take = indices[start:start + batch_size]
            tensor = rows[take]
            if steps:
                tensor = apply_batch_steps(
                    tensor, steps, seed_policy.seed_for("batch", epoch=epoch,
                                                        batch_index=b),
                    ctx, externals)
            yield Batch(indices=tuple(int(i) for i in take), tensor=tensor,
                        labels=labels[take])
    finally:
        if own_externals:
            externals.close()


def run_pipeline(dataset: Dataset, validated: ValidatedPipeline,
                 seed_policy: SeedPolicy, parallelism: int = 1,
                 on_error: str = "raise") -> tuple[Dataset, ExecutionReport]:
    """Sample stage then dataset stage; the batch section stays with the
    consumer via iterate_batches (it reruns every epoch)."""
    report = ExecutionReport()
    out = run_sample_stage(dataset, validated.section_steps("sample"),
                           seed_policy, parallelism=parallelism,
                           on_error=on_error, report=report)
    out = run_dataset_stage(out, validated.section_steps("dataset"),
                            seed_policy, report=report)
    report.stage_seconds.setdefault("batch", 0.0)
    report.sample_counts.setdefault("batch", 0)
    return out, report

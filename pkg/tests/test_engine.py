"""Execution engine: determinism, parallelism, isolation, batch iteration."""

import numpy as np
import pytest

import pipeforge.builtins as builtins_mod
from pipeforge.builtins import BuiltinTransform
from pipeforge.data import AudioClip, Dataset, FeatureTensor, SampleRecord
from pipeforge.engine import (
    ExecutionReport,
    SeedPolicy,
    iterate_batches,
    run_pipeline,
    run_sample_stage,
)
from pipeforge.errors import KindError, PluginFailureError, ShapeError
from pipeforge.pipeline import pipeline_from_dict, validate_pipeline

POLICY = SeedPolicy(master_seed=1234)


def doc(sample=(), dataset=(), batch=()) -> dict:
    def entry(i, name, version="^1"):
        return {"plugin": name, "version": version, "instance_id": f"s{i}_{name}"}
    return {
        "id": "engine-test",
        "sample": [entry(i, n) for i, n in enumerate(sample)],
        "dataset": [entry(i, n) for i, n in enumerate(dataset)],
        "batch": [entry(i, n) for i, n in enumerate(batch)],
    }


def validated(registry, sample=(), dataset=(), batch=(), params=None):
    spec = pipeline_from_dict(doc(sample=sample, dataset=dataset, batch=batch))
    return validate_pipeline(spec, params or {}, registry)


def tone_dataset(n=12, length=4000) -> Dataset:
    samples = []
    for i in range(n):
        rng = np.random.default_rng(100 + i)
        pcm = (0.3 * np.sin(2 * np.pi * (300.0 + 50 * i) / 16000.0
                            * np.arange(length))
               + 0.01 * rng.standard_normal(length)).astype(np.float32)
        samples.append(SampleRecord(
            sample_id=f"w/clip{i:03d}_nohash_0",
            payload=AudioClip(pcm=pcm), label=i % 2,
            speaker_id=f"clip{i:03d}"))
    noise = [AudioClip(pcm=np.linspace(-0.4, 0.4, 32000, dtype=np.float32))]
    splits = {s.sample_id: ("train" if i % 3 else "validation")
              for i, s in enumerate(samples)}
    return Dataset(samples=samples, splits=splits, noise_bank=noise)


PIPE = dict(sample=("pad_trim", "time_shift", "noise_mix", "mfcc"),
            dataset=("mean_std_normalize",),
            params={"s0_pad_trim": {"target_len": 4000},
                    "s1_time_shift": {"max_shift_ms": 20.0},
                    "s2_noise_mix": {"prob": 0.8, "max_volume": 0.2}})


def run_once(registry, seed=1234, jobs=1, n=12):
    vp = validated(registry, sample=PIPE["sample"], dataset=PIPE["dataset"],
                   params=dict(PIPE["params"]))
    out, report = run_pipeline(tone_dataset(n=n), vp, SeedPolicy(seed),
                               parallelism=jobs)
    return out, report


def payload_bytes_of(ds: Dataset) -> dict:
    return {s.sample_id: s.payload.data.tobytes() for s in ds.samples}


# -- determinism and parallelism -----------------------------------------------


def test_same_seed_reproduces_bitwise(registry):
    a, _ = run_once(registry, seed=7)
    b, _ = run_once(registry, seed=7)
    assert payload_bytes_of(a) == payload_bytes_of(b)


def test_different_seed_changes_augmented_output(registry):
    a, _ = run_once(registry, seed=7)
    b, _ = run_once(registry, seed=8)
    assert payload_bytes_of(a) != payload_bytes_of(b)


def test_parallelism_does_not_touch_values(registry):
    serial, _ = run_once(registry, seed=3, jobs=1)
    threaded, _ = run_once(registry, seed=3, jobs=8)
    assert payload_bytes_of(serial) == payload_bytes_of(threaded)


def test_worker_count_beyond_samples(registry):
    small, _ = run_once(registry, seed=3, jobs=32, n=5)
    ref, _ = run_once(registry, seed=3, jobs=1, n=5)
    assert payload_bytes_of(small) == payload_bytes_of(ref)


def test_sample_seed_ignores_neighbors(registry):
    vp = validated(registry, sample=("time_shift",),
                   params={"s0_time_shift": {"max_shift_ms": 50.0}})
    full = tone_dataset(n=8)
    out_full = run_sample_stage(full, vp.section_steps("sample"), POLICY)
    # same sample at the same global rank, neighbors removed behind it
    subset = Dataset(samples=full.samples[:3], splits=full.splits,
                     noise_bank=full.noise_bank)
    out_sub = run_sample_stage(subset, vp.section_steps("sample"), POLICY)
    a = {s.sample_id: s.payload.pcm.tobytes() for s in out_full.samples[:3]}
    b = {s.sample_id: s.payload.pcm.tobytes() for s in out_sub.samples}
    assert a == b


# -- report -------------------------------------------------------------------


def test_report_counts_and_stages(registry):
    out, report = run_once(registry, n=10)
    d = report.to_dict()
    assert d["sample_counts"]["sample"] == 10
    assert d["invocations"]["mfcc@1.0.0"] == 10
    assert d["invocations"]["mean_std_normalize@1.0.0"] == 1
    assert set(d["stage_seconds"]) == {"sample", "dataset", "batch"}
    assert d["failures"] == []
    # 4000-sample clips, 640-sample frames, 320 hop: 1 + (4000-640)//320 = 11
    assert out.samples[0].payload.shape == (11, 10)


# -- failure isolation ----------------------------------------------------------


def exploding(monkeypatch, fail_ids):
    """Install a builtin that raises for chosen sample payload lengths."""
    def impl(payload, params, rng, ctx):
        if payload.pcm[0] in fail_ids:
            raise ValueError("synthetic fault")
        return payload
    monkeypatch.setitem(builtins_mod.BUILTIN_TRANSFORMS, "pad_trim",
                        BuiltinTransform(sample=impl))


def tagged_dataset(n=6):
    samples = [SampleRecord(sample_id=f"w/c{i}",
                            payload=AudioClip(pcm=np.full(16, float(i),
                                                          dtype=np.float32)),
                            label=0, speaker_id=f"c{i}")
               for i in range(n)]
    return Dataset(samples=samples)


def test_on_error_skip_drops_only_failures(registry, monkeypatch):
    exploding(monkeypatch, fail_ids={2.0, 4.0})
    vp = validated(registry, sample=("pad_trim",),
                   params={"s0_pad_trim": {"target_len": 16}})
    report = ExecutionReport()
    out = run_sample_stage(tagged_dataset(), vp.section_steps("sample"),
                           POLICY, on_error="skip", report=report)
    kept = {s.sample_id for s in out.samples}
    assert kept == {"w/c0", "w/c1", "w/c3", "w/c5"}
    assert [sid for sid, _ in report.failures] == ["w/c2", "w/c4"]
    assert all("pad_trim" in msg and "synthetic fault" in msg
               for _, msg in report.failures)


def test_on_error_raise_names_plugin_and_sample(registry, monkeypatch):
    exploding(monkeypatch, fail_ids={1.0})
    vp = validated(registry, sample=("pad_trim",),
                   params={"s0_pad_trim": {"target_len": 16}})
    with pytest.raises(PluginFailureError, match=r"pad_trim.*w/c1"):
        run_sample_stage(tagged_dataset(), vp.section_steps("sample"), POLICY)


def test_wrong_output_kind_is_not_skippable(registry, monkeypatch):
    def wrong(payload, params, rng, ctx):
        return FeatureTensor(np.zeros((2, 2), dtype=np.float32))
    monkeypatch.setitem(builtins_mod.BUILTIN_TRANSFORMS, "pad_trim",
                        BuiltinTransform(sample=wrong))
    vp = validated(registry, sample=("pad_trim",),
                   params={"s0_pad_trim": {"target_len": 16}})
    with pytest.raises(KindError):
        run_sample_stage(tagged_dataset(), vp.section_steps("sample"),
                         POLICY, on_error="skip")


# -- batch iteration --------------------------------------------------------------


def featurized(registry, n=10):
    out, _ = run_once(registry, seed=5, n=n)
    return out


def test_batch_arithmetic_and_shapes(registry):
    ds = featurized(registry, n=10)
    batches = list(iterate_batches(ds, batch_size=4, epoch=0, shuffle=False,
                                   steps=(), seed_policy=POLICY))
    assert [b.tensor.shape[0] for b in batches] == [4, 4, 2]
    assert all(b.tensor.shape[1:] == (11, 10) for b in batches)
    assert all(len(b.labels) == b.tensor.shape[0] for b in batches)
    # unshuffled order is sorted sample_id order
    assert [i for b in batches for i in b.indices] == list(range(10))


def test_shuffle_permutation_per_epoch(registry):
    ds = featurized(registry, n=10)
    def order(epoch):
        return [i for b in iterate_batches(ds, 4, epoch, True, (), POLICY)
                for i in b.indices]
    assert order(0) != list(range(10))  # vanishingly unlikely identity
    assert order(0) == order(0)
    assert order(0) != order(1)
    assert sorted(order(1)) == list(range(10))


def test_labels_follow_their_rows(registry):
    ds = featurized(registry, n=10)
    by_rank = {i: s.label
               for i, s in enumerate(sorted(ds.samples,
                                            key=lambda s: s.sample_id))}
    for b in iterate_batches(ds, 3, epoch=2, shuffle=True, steps=(),
                             seed_policy=POLICY):
        assert [by_rank[i] for i in b.indices] == list(b.labels)


def test_batch_steps_redraw_per_epoch_and_batch(registry):
    ds = featurized(registry, n=8)
    vp = validated(registry, batch=("noise_mix",),
                   params={"s0_noise_mix": {"prob": 1.0, "max_volume": 0.5}})
    steps = vp.section_steps("batch")
    e0 = [b.tensor.copy() for b in iterate_batches(ds, 4, 0, False, steps, POLICY)]
    e0_again = [b.tensor.copy() for b in iterate_batches(ds, 4, 0, False, steps, POLICY)]
    e1 = [b.tensor.copy() for b in iterate_batches(ds, 4, 1, False, steps, POLICY)]
    for a, b in zip(e0, e0_again):
        assert np.array_equal(a, b)
    assert not np.array_equal(e0[0], e1[0])  # fresh draws each epoch
    assert not np.array_equal(e0[0], e0[1])  # and per batch


def test_batch_size_change_rejected(registry, monkeypatch):
    ds = featurized(registry, n=8)  # before the patch; this uses noise_mix too
    def halves(rows, params, rng, ctx):
        return rows[::2]
    monkeypatch.setitem(builtins_mod.BUILTIN_TRANSFORMS, "noise_mix",
                        BuiltinTransform(batch=halves))
    vp = validated(registry, batch=("noise_mix",),
                   params={"s0_noise_mix": {"prob": 1.0, "max_volume": 0.5}})
    with pytest.raises(ShapeError, match="batch size"):
        list(iterate_batches(ds, 4, 0, False, vp.section_steps("batch"), POLICY))


def test_batch_size_must_be_positive(registry):
    ds = featurized(registry, n=4)
    with pytest.raises(ShapeError):
        list(iterate_batches(ds, 0, 0, False, (), POLICY))


def test_ragged_rows_rejected(registry):
    samples = [
        SampleRecord(sample_id="w/a",
                     payload=FeatureTensor(np.zeros((3, 4), dtype=np.float32)),
                     label=0),
        SampleRecord(sample_id="w/b",
                     payload=FeatureTensor(np.zeros((5, 4), dtype=np.float32)),
                     label=1),
    ]
    with pytest.raises(ShapeError):
        list(iterate_batches(Dataset(samples=samples), 2, 0, False, (), POLICY))

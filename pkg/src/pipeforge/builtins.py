"""In-process implementations behind the built-in plugin manifests.

Transforms come in up to three flavors matching their allowed scopes:
`sample(payload, params, rng, ctx)`, `batch(rows, params, rng, ctx)` on the
stacked [B, ...] array, and `dataset(dataset, params, seed)`. All are pure
given their arguments; randomness only ever comes from the passed rng/seed.

Payload-polymorphic augmentations (time_shift, noise_mix) act on audio by
sample count and on tensors by leading-axis rows, treating the leading axis
as spanning one second when a time quantity must be converted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import dsp
from .data import AudioClip, Dataset, FeatureTensor, Payload, SampleRecord
from .dataset import SPLIT_CRITERIA, rebalance as rebalance_dataset
from .errors import EmptyNoiseBankError, KindError, RangeViolationError
from .metrics import cross_entropy as _cross_entropy, top1_accuracy as _top1
from .seeding import derive_seed


@dataclass(frozen=True)
class ExecContext:
    """Read-only facts a transform may consult beyond its own payload."""
    noise_bank: tuple[AudioClip, ...] = ()


@dataclass(frozen=True)
class BuiltinTransform:
    sample: Optional[Callable] = None
    batch: Optional[Callable] = None
    dataset: Optional[Callable] = None

    def impl_for(self, scope: str) -> Callable:
        fn = getattr(self, "dataset" if scope == "dataset" else scope)
        if fn is None:
            raise KindError(f"builtin transform has no {scope}-scope implementation")
        return fn


# ---------------------------------------------------------------------------
# Sample-scope transforms
# ---------------------------------------------------------------------------


def _require_audio(payload: Payload, name: str) -> AudioClip:
    if not isinstance(payload, AudioClip):
        raise KindError(f"{name} expects audio, got {payload.kind}")
    return payload


def pad_trim(payload: Payload, params: dict, rng, ctx: ExecContext) -> Payload:
    """Zero-pad or truncate at the end to exactly target_len samples."""
    clip = _require_audio(payload, "pad_trim")
    target = params["target_len"]
    pcm = clip.pcm
    if len(pcm) >= target:
        out = pcm[:target]
    else:
        out = np.concatenate([pcm, np.zeros(target - len(pcm), dtype=np.float32)])
    return AudioClip(pcm=np.ascontiguousarray(out), sample_rate=clip.sample_rate)


def pre_emphasis(payload: Payload, params: dict, rng, ctx: ExecContext) -> Payload:
    clip = _require_audio(payload, "pre_emphasis")
    return dsp.pre_emphasis(clip, params["coefficient"])


def _shift_rows(x: np.ndarray, shift: int) -> np.ndarray:
    """Shift along axis 0 by `shift` places (positive = later), zero-filling."""
    out = np.zeros_like(x)
    if shift > 0:
        out[shift:] = x[:len(x) - shift]
    elif shift < 0:
        out[:len(x) + shift] = x[-shift:]
    else:
        out[:] = x
    return out


def _max_shift_units(payload, max_shift_ms: float) -> tuple[int, int]:
    """(max shift, axis length) in leading-axis units for either payload kind."""
    if isinstance(payload, AudioClip):
        length = len(payload.pcm)
        max_units = int(round(max_shift_ms / 1000.0 * payload.sample_rate))
    else:
        length = payload.data.shape[0]
        # tensors carry no rate; by convention the leading axis spans 1 s
        max_units = int(round(max_shift_ms / 1000.0 * length))
    return max_units, length


def time_shift_sample(payload: Payload, params: dict, rng, ctx: ExecContext) -> Payload:
    max_units, length = _max_shift_units(payload, params["max_shift_ms"])
    if max_units >= length:
        raise RangeViolationError(
            f"max_shift_ms={params['max_shift_ms']} spans {max_units} steps, "
            f"not below the payload length {length}")
    if max_units == 0:
        return payload
    shift = int(rng.integers(-max_units, max_units + 1))
    if isinstance(payload, AudioClip):
        return AudioClip(pcm=_shift_rows(payload.pcm, shift),
                         sample_rate=payload.sample_rate)
    return FeatureTensor(data=_shift_rows(payload.data, shift))


def time_shift_batch(rows: np.ndarray, params: dict, rng, ctx: ExecContext) -> np.ndarray:
    length = rows.shape[1]
    max_units = int(round(params["max_shift_ms"] / 1000.0 * length))
    if max_units >= length:
        raise RangeViolationError(
            f"max_shift_ms={params['max_shift_ms']} spans {max_units} steps, "
            f"not below the row length {length}")
    if max_units == 0:
        return rows
    out = np.empty_like(rows)
    for i in range(rows.shape[0]):
        shift = int(rng.integers(-max_units, max_units + 1))
        out[i] = _shift_rows(rows[i], shift)
    return out


def _noise_segment(bank: tuple[AudioClip, ...], length: int, rng) -> np.ndarray:
    clip = bank[int(rng.integers(len(bank)))]
    offset = int(rng.integers(max(1, len(clip.pcm))))
    return np.take(clip.pcm, offset + np.arange(length), mode="wrap")


def _mix_noise_1d(x: np.ndarray, params: dict, rng, bank) -> np.ndarray:
    """Audio-like vector: add a bank segment, saturate to [-1, 1]."""
    if rng.random() >= params["prob"]:
        return x
    if not bank:
        raise EmptyNoiseBankError("noise_mix needs a non-empty noise bank for audio")
    volume = rng.uniform(0.0, params["max_volume"])
    seg = _noise_segment(bank, len(x), rng)
    return np.clip(x + np.float32(volume) * seg, -1.0, 1.0).astype(np.float32)


def _mix_noise_nd(x: np.ndarray, params: dict, rng) -> np.ndarray:
    """Feature tensor: additive white noise, unbounded range preserved."""
    if rng.random() >= params["prob"]:
        return x
    volume = rng.uniform(0.0, params["max_volume"])
    noise = rng.uniform(-1.0, 1.0, size=x.shape)
    return (x + np.float32(volume) * noise.astype(np.float32)).astype(np.float32)


def noise_mix_sample(payload: Payload, params: dict, rng, ctx: ExecContext) -> Payload:
    if params["prob"] == 0.0:
        return payload
    if isinstance(payload, AudioClip):
        return AudioClip(pcm=_mix_noise_1d(payload.pcm, params, rng, ctx.noise_bank),
                         sample_rate=payload.sample_rate)
    return FeatureTensor(data=_mix_noise_nd(payload.data, params, rng))


def noise_mix_batch(rows: np.ndarray, params: dict, rng, ctx: ExecContext) -> np.ndarray:
    if params["prob"] == 0.0:
        return rows
    out = np.empty_like(rows)
    audio_like = rows.ndim == 2
    for i in range(rows.shape[0]):
        if audio_like:
            out[i] = _mix_noise_1d(rows[i], params, rng, ctx.noise_bank)
        else:
            out[i] = _mix_noise_nd(rows[i], params, rng)
    return out


def mel_spectrogram(payload: Payload, params: dict, rng, ctx: ExecContext) -> Payload:
    clip = _require_audio(payload, "mel_spectrogram")
    feats = dsp.extract_log_mel(
        clip,
        frame_len_ms=params["frame_len_ms"], hop_ms=params["hop_ms"],
        window=params["window"], fft_size=params["fft_size"],
        n_mels=params["n_mels"], f_min=params["f_min"], f_max=params["f_max"])
    return feats


def mfcc(payload: Payload, params: dict, rng, ctx: ExecContext) -> Payload:
    clip = _require_audio(payload, "mfcc")
    feats = dsp.extract_mfcc(
        clip, n_mfcc=params["n_mfcc"],
        frame_len_ms=params["frame_len_ms"], hop_ms=params["hop_ms"],
        window=params["window"], fft_size=params["fft_size"],
        n_mels=params["n_mels"], f_min=params["f_min"], f_max=params["f_max"])
    return feats


# ---------------------------------------------------------------------------
# Dataset-scope transforms
# ---------------------------------------------------------------------------


def _training_samples(dataset: Dataset) -> list[SampleRecord]:
    """Train-split members; every sample when no split has been assigned."""
    if not dataset.splits:
        return list(dataset.samples)
    return [s for s in dataset.samples
            if dataset.splits.get(s.sample_id) == "train"]


def mean_std_normalize(dataset: Dataset, params: dict, seed: int) -> Dataset:
    """Per-coefficient standardization with statistics from the training split.

    Coefficient = last-axis position; statistics pool over frames and samples.
    The fitted mean/std land in dataset.meta["normalize"] for export.
    """
    train = _training_samples(dataset)
    if not train:
        raise RangeViolationError("mean_std_normalize: training split is empty")
    columns = []
    for s in train:
        if not isinstance(s.payload, FeatureTensor):
            raise KindError(
                f"mean_std_normalize expects features, got {s.payload.kind} "
                f"for {s.sample_id}")
        columns.append(s.payload.data.reshape(-1, s.payload.data.shape[-1]))
    pooled = np.concatenate(columns, axis=0).astype(np.float64)
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)
    denom = np.maximum(std, 1e-8)

    out = dataset.shallow_copy()
    out.samples = [
        s.with_payload(FeatureTensor(
            data=((s.payload.data.astype(np.float64) - mean) / denom).astype(np.float32)))
        for s in out.samples]
    out.meta = dict(out.meta)
    out.meta["normalize"] = {"mean": mean.tolist(), "std": std.tolist()}
    return out


def rebalance(dataset: Dataset, params: dict, seed: int) -> Dataset:
    return rebalance_dataset(dataset, params["unknown_pct"], params["silence_pct"], seed)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


BUILTIN_TRANSFORMS: dict[str, BuiltinTransform] = {
    "pad_trim": BuiltinTransform(sample=pad_trim),
    "pre_emphasis": BuiltinTransform(sample=pre_emphasis),
    "time_shift": BuiltinTransform(sample=time_shift_sample, batch=time_shift_batch),
    "noise_mix": BuiltinTransform(sample=noise_mix_sample, batch=noise_mix_batch),
    "mel_spectrogram": BuiltinTransform(sample=mel_spectrogram),
    "mfcc": BuiltinTransform(sample=mfcc),
    "mean_std_normalize": BuiltinTransform(dataset=mean_std_normalize),
    "rebalance": BuiltinTransform(dataset=rebalance),
}


def _loss_cross_entropy(logits: np.ndarray, labels: np.ndarray, params: dict):
    return _cross_entropy(logits, labels)


def _accuracy_top1(predictions: np.ndarray, labels: np.ndarray, params: dict) -> float:
    p = np.asarray(predictions)
    if p.ndim == 1:  # already class indices
        y = np.asarray(labels)
        if p.shape != y.shape or p.size == 0:
            raise RangeViolationError(
                f"predictions/labels length mismatch: {p.shape} vs {y.shape}")
        return float(np.mean(p.astype(np.int64) == y.astype(np.int64)))
    return _top1(p, labels)


BUILTIN_LOSSES: dict[str, Callable] = {
    "cross_entropy": _loss_cross_entropy,
}

BUILTIN_ACCURACIES: dict[str, Callable] = {
    "top1_accuracy": _accuracy_top1,
}

BUILTIN_SPLITS: dict[str, Callable] = dict(SPLIT_CRITERIA)

_TABLES = {
    "transform": BUILTIN_TRANSFORMS,
    "loss": BUILTIN_LOSSES,
    "accuracy": BUILTIN_ACCURACIES,
    "split": BUILTIN_SPLITS,
}


def has_builtin(kind: str, builtin_id: str, scopes: tuple[str, ...] = ()) -> bool:
    """True when the id exists for the kind and covers every declared scope."""
    table = _TABLES.get(kind)
    if table is None or builtin_id not in table:
        return False
    if kind == "transform":
        entry = table[builtin_id]
        return all(getattr(entry, "dataset" if s == "dataset" else s) is not None
                   for s in scopes)
    return True


def get_builtin(kind: str, builtin_id: str):
    table = _TABLES.get(kind, {})
    try:
        return table[builtin_id]
    except KeyError:
        raise KindError(f"no builtin {kind} named {builtin_id!r}") from None

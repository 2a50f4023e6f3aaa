"""Data vessels flowing through the engine: payloads, samples, datasets, batches.

Payloads are either audio (1-D float32 PCM in [-1, 1] plus a sample rate) or
feature tensors (row-major float32 of any rank). Arrays are treated as
immutable once attached to a record; transforms return new arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FormatError, ShapeError

SPLITS = ("train", "validation", "test")


@dataclass(frozen=True, eq=False)
class AudioClip:
    pcm: np.ndarray  # float32, shape [n]
    sample_rate: int = 16000

    def __post_init__(self):
        pcm = np.asarray(self.pcm, dtype=np.float32)
        if pcm.ndim != 1:
            raise FormatError(f"audio pcm must be 1-D, got shape {pcm.shape}")
        if self.sample_rate <= 0:
            raise FormatError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "pcm", pcm)

    @property
    def kind(self) -> str:
        return "audio"


@dataclass(frozen=True, eq=False)
class FeatureTensor:
    data: np.ndarray  # float32, row-major

    def __post_init__(self):
        data = np.ascontiguousarray(np.asarray(self.data, dtype=np.float32))
        object.__setattr__(self, "data", data)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def kind(self) -> str:
        return "features"


Payload = AudioClip | FeatureTensor


def payload_bytes(payload: Payload) -> bytes:
    """Canonical little-endian float32 bytes of a payload (for hashing/tests)."""
    arr = payload.pcm if isinstance(payload, AudioClip) else payload.data
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


@dataclass(frozen=True, eq=False)
class SampleRecord:
    sample_id: str
    payload: Payload
    label: object = None  # raw word (str) or class index (int)
    speaker_id: str = ""
    origin: str = ""

    def with_payload(self, payload: Payload) -> "SampleRecord":
        return replace(self, payload=payload)


@dataclass
class Dataset:
    """Samples plus the side context dataset-scope transforms may read."""

    samples: list[SampleRecord]
    noise_bank: list[AudioClip] = field(default_factory=list)
    splits: dict[str, str] = field(default_factory=dict)  # sample_id -> split
    class_map: object = None  # dataset.ClassMap when labeling has happened
    meta: dict = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)  # unreadable inputs

    def __len__(self) -> int:
        return len(self.samples)

    def sorted_ids(self) -> list[str]:
        return sorted(s.sample_id for s in self.samples)

    def by_id(self, sample_id: str) -> SampleRecord:
        for s in self.samples:
            if s.sample_id == sample_id:
                return s
        raise KeyError(sample_id)

    def split_of(self, sample_id: str) -> str | None:
        return self.splits.get(sample_id)

    def shallow_copy(self) -> "Dataset":
        return Dataset(samples=list(self.samples), noise_bank=list(self.noise_bank),
                       splits=dict(self.splits), class_map=self.class_map,
                       meta=dict(self.meta), skipped=list(self.skipped))


@dataclass(frozen=True, eq=False)
class Batch:
    indices: tuple[int, ...]  # ranks in sorted sample_id order
    tensor: np.ndarray        # float32, shape [batch, *sample_shape]
    labels: tuple            # one label per row


def as_tensor_rows(dataset: Dataset) -> np.ndarray:
    """Stack every payload into one [n, *shape] float32 array.

    Rows follow sorted sample_id order so the stack is independent of
    ingestion order. Audio payloads stack as rank-1 tensors. Raises
    ShapeError when shapes differ (batching requires homogeneous tensors).
    """
    ordered = sorted(dataset.samples, key=lambda s: s.sample_id)
    arrays = []
    for s in ordered:
        arr = s.payload.pcm if isinstance(s.payload, AudioClip) else s.payload.data
        arrays.append(arr)
    if not arrays:
        return np.zeros((0,), dtype=np.float32)
    shape = arrays[0].shape
    for s, arr in zip(ordered, arrays):
        if arr.shape != shape:
            raise ShapeError(
                f"sample {s.sample_id}: payload shape {arr.shape} differs from {shape}")
    return np.stack(arrays).astype(np.float32, copy=False)

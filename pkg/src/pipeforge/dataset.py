"""Speech-Commands-layout ingestion, KWS class maps, and dataset splitting.

The on-disk layout is ``<word>/<file>.wav`` with background noise clips in
``_background_noise_/``. The speaker id is the filename prefix before the
``_nohash_`` marker, and the default split criterion hashes that id so every
clip of one speaker lands in one split regardless of which other samples
exist.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import SPLITS, AudioClip, Dataset, SampleRecord
from .dsp import decode_wav
from .errors import (
    DuplicateKeywordError,
    EmptyDatasetError,
    RangeViolationError,
)
from .seeding import derive_seed, rng_from_seed

log = logging.getLogger(__name__)

NOISE_DIR = "_background_noise_"
UNKNOWN_WORD_LABEL = "_unknown_"
SILENCE_WORD_LABEL = "_silence_"


# ---------------------------------------------------------------------------
# Class maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassMap:
    keywords: tuple[str, ...]
    unknown_index: int | None
    silence_index: int | None

    @property
    def n_classes(self) -> int:
        return len(self.keywords) + (self.unknown_index is not None) + (
            self.silence_index is not None)

    def class_names(self) -> list[str]:
        names = list(self.keywords)
        if self.unknown_index is not None:
            names.append("unknown")
        if self.silence_index is not None:
            names.append("silence")
        return names

    def to_dict(self) -> dict:
        return {"keywords": list(self.keywords),
                "include_unknown": self.unknown_index is not None,
                "include_silence": self.silence_index is not None}


def build_class_map(keywords: list[str], include_unknown: bool = True,
                    include_silence: bool = True) -> ClassMap:
    """Indices: keywords in the given order, then unknown, then silence."""
    seen = set()
    for w in keywords:
        if w in seen:
            raise DuplicateKeywordError(f"keyword {w!r} listed twice")
        seen.add(w)
    unknown_index = len(keywords) if include_unknown else None
    silence_index = (len(keywords) + (1 if include_unknown else 0)
                     if include_silence else None)
    return ClassMap(keywords=tuple(keywords), unknown_index=unknown_index,
                    silence_index=silence_index)


def assign_label(word, class_map: ClassMap):
    """Keyword -> its index; silence marker -> silence; anything else -> unknown.

    Total over all inputs. Returns None for non-keywords when the unknown
    class is disabled, which callers treat as "exclude this sample".
    """
    if isinstance(word, str) and word in class_map.keywords:
        return class_map.keywords.index(word)
    if word == SILENCE_WORD_LABEL and class_map.silence_index is not None:
        return class_map.silence_index
    return class_map.unknown_index


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------


def speaker_of(stem: str) -> str:
    """Filename prefix before the `_nohash_` marker; whole stem if absent."""
    head, marker, _ = stem.partition("_nohash_")
    return head if marker else stem


def ingest_dataset(root: str | Path) -> Dataset:
    """Walk a Speech-Commands-layout directory into a Dataset of audio clips.

    Unreadable files are skipped with a warning and counted; noise clips go
    to the noise bank, not the sample list.
    """
    root = Path(root)
    samples: list[SampleRecord] = []
    noise_bank: list[AudioClip] = []
    skipped: list[str] = []
    for word_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for wav_path in sorted(word_dir.glob("*.wav")):
            try:
                clip = decode_wav(wav_path.read_bytes())
            except Exception as e:
                log.warning("skipping unreadable %s: %s", wav_path, e)
                skipped.append(str(wav_path))
                continue
            if word_dir.name == NOISE_DIR:
                noise_bank.append(clip)
                continue
            stem = wav_path.stem
            samples.append(SampleRecord(
                sample_id=f"{word_dir.name}/{stem}",
                payload=clip,
                label=word_dir.name,
                speaker_id=speaker_of(stem),
                origin=str(wav_path),
            ))
    if not samples:
        raise EmptyDatasetError(f"no WAV samples found under {root}")
    return Dataset(samples=samples, noise_bank=noise_bank, skipped=skipped)


def apply_class_map(dataset: Dataset, class_map: ClassMap) -> Dataset:
    """Replace word labels with class indices; drop excluded samples."""
    out = dataset.shallow_copy()
    kept = []
    for s in out.samples:
        idx = assign_label(s.label, class_map)
        if idx is None:
            continue
        kept.append(SampleRecord(sample_id=s.sample_id, payload=s.payload,
                                 label=int(idx), speaker_id=s.speaker_id,
                                 origin=s.origin))
    out.samples = kept
    out.class_map = class_map
    return out


# ---------------------------------------------------------------------------
# Split criteria (the split plugin kind)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitConfig:
    validation_pct: float = 10.0
    test_pct: float = 10.0

    def __post_init__(self):
        if not (0 <= self.validation_pct < 100) or not (0 <= self.test_pct < 100):
            raise RangeViolationError(
                f"split percentages must lie in [0, 100): "
                f"validation={self.validation_pct}, test={self.test_pct}")
        if self.validation_pct + self.test_pct >= 100:
            raise RangeViolationError(
                f"validation+test = {self.validation_pct + self.test_pct} must stay below 100")


def _bucket(h: "hashlib._Hash", config: SplitConfig) -> str:
    value = int(h.hexdigest(), 16) % 10000 / 100.0  # [0, 100)
    if value < config.validation_pct:
        return "validation"
    if value < config.validation_pct + config.test_pct:
        return "test"
    return "train"


def stable_hash_split(sample: SampleRecord, config: SplitConfig) -> str:
    """Default criterion: bucket by a 256-bit digest of the speaker id.

    Depends only on (speaker_id, config): adding or removing other samples
    never moves a sample, and all clips of one speaker share a split.
    """
    return _bucket(hashlib.sha256(sample.speaker_id.encode("utf-8")), config)


def split_stable_hash(dataset: Dataset, config: SplitConfig, seed: int = 0) -> dict:
    return {s.sample_id: stable_hash_split(s, config) for s in dataset.samples}


def split_random(dataset: Dataset, config: SplitConfig, seed: int = 0) -> dict:
    """Pure-random criterion: seeded digest of (seed, sample_id), per sample."""
    out = {}
    for s in dataset.samples:
        h = hashlib.sha256(f"{seed}:{s.sample_id}".encode("utf-8"))
        out[s.sample_id] = _bucket(h, config)
    return out


def split_stratified(dataset: Dataset, config: SplitConfig, seed: int = 0) -> dict:
    """Per-class proportional assignment with a seeded shuffle inside each class."""
    by_label: dict = {}
    for s in dataset.samples:
        by_label.setdefault(s.label, []).append(s.sample_id)
    rng = rng_from_seed(derive_seed(seed, "split"))
    out = {}
    for label in sorted(by_label, key=str):
        ids = sorted(by_label[label])
        perm = rng.permutation(len(ids))
        n = len(ids)
        n_val = int(round(n * config.validation_pct / 100.0))
        n_test = int(round(n * config.test_pct / 100.0))
        for rank, idx in enumerate(perm):
            if rank < n_val:
                out[ids[idx]] = "validation"
            elif rank < n_val + n_test:
                out[ids[idx]] = "test"
            else:
                out[ids[idx]] = "train"
    return out


def split_list_file(dataset: Dataset, config, seed: int = 0, *,
                    validation_list: str = "", test_list: str = "") -> dict:
    """Membership criterion fed by the dataset's published list files.

    List files contain one `<word>/<file>.wav` path per line; everything
    not listed is training data.
    """
    def load(path: str) -> set:
        if not path:
            return set()
        entries = set()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line:
                entries.add(line[:-4] if line.endswith(".wav") else line)
        return entries

    val_ids = load(validation_list)
    test_ids = load(test_list)
    out = {}
    for s in dataset.samples:
        if s.sample_id in val_ids:
            out[s.sample_id] = "validation"
        elif s.sample_id in test_ids:
            out[s.sample_id] = "test"
        else:
            out[s.sample_id] = "train"
    return out


def write_split_manifest(dataset: Dataset) -> str:
    """`sample_id<TAB>split<TAB>label` lines, sorted by sample_id."""
    lines = []
    for sid in dataset.sorted_ids():
        s = dataset.by_id(sid)
        lines.append(f"{sid}\t{dataset.splits.get(sid, '')}\t{s.label}")
    return "\n".join(lines) + "\n"


def dataset_digest(dataset: Dataset) -> str:
    """Content identity of a split dataset: digest of its split manifest."""
    return hashlib.sha256(write_split_manifest(dataset).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Rebalancing (dataset-scope transform)
# ---------------------------------------------------------------------------


def rebalance(dataset: Dataset, unknown_pct: float, silence_pct: float,
              seed: int, *, silence_len: int = 16000,
              silence_max_volume: float = 0.1) -> Dataset:
    """Per split: keep keywords, subsample unknowns, synthesize silence.

    Target sizes follow the final-mix rule: with K keyword samples kept and
    percentages u and s, the final split size is N = K / (1 - u - s), of
    which round(u*N) are unknown and round(s*N) synthesized silence.
    """
    if unknown_pct < 0 or silence_pct < 0 or unknown_pct + silence_pct >= 100:
        raise RangeViolationError(
            f"unknown_pct={unknown_pct}, silence_pct={silence_pct} must be "
            f"non-negative and sum below 100")
    cm = dataset.class_map
    if cm is None or not isinstance(cm, ClassMap):
        raise RangeViolationError("rebalance needs a dataset labeled through a class map")

    out = dataset.shallow_copy()
    rng = rng_from_seed(derive_seed(seed, "dataset"))
    kept: list[SampleRecord] = []
    new_splits = dict(out.splits)
    silence_serial = 0

    for split in SPLITS:
        members = [s for s in out.samples if out.splits.get(s.sample_id) == split]
        if not members:
            continue
        keyword_samples = [s for s in members
                           if isinstance(s.label, int) and s.label < len(cm.keywords)]
        unknown_samples = sorted(
            (s for s in members if cm.unknown_index is not None
             and s.label == cm.unknown_index),
            key=lambda s: s.sample_id)
        taken = {s.sample_id for s in keyword_samples}
        taken.update(s.sample_id for s in unknown_samples)
        other = [s for s in members if s.sample_id not in taken]

        k = len(keyword_samples)
        final = k / (1.0 - (unknown_pct + silence_pct) / 100.0) if k else len(members)
        n_unknown = int(round(final * unknown_pct / 100.0))
        n_silence = int(round(final * silence_pct / 100.0)) if cm.silence_index is not None else 0

        chosen_unknown = unknown_samples
        if len(unknown_samples) > n_unknown:
            idx = rng.choice(len(unknown_samples), size=n_unknown, replace=False)
            chosen_unknown = [unknown_samples[i] for i in sorted(idx)]
        elif len(unknown_samples) < n_unknown:
            log.warning("split %s: only %d unknown samples for a target of %d",
                        split, len(unknown_samples), n_unknown)

        silence: list[SampleRecord] = []
        if n_silence > 0 and silence_pct > 0:
            if not out.noise_bank:
                log.warning("empty noise bank: synthesizing zero-signal silence")
            for _ in range(n_silence):
                pcm = _silence_clip(out.noise_bank, silence_len, silence_max_volume, rng)
                sid = f"{SILENCE_WORD_LABEL}/{split}_{silence_serial:05d}"
                silence_serial += 1
                silence.append(SampleRecord(
                    sample_id=sid, payload=pcm, label=int(cm.silence_index),
                    speaker_id=f"{SILENCE_WORD_LABEL}{silence_serial}",
                    origin="synthesized"))
                new_splits[sid] = split

        kept.extend(keyword_samples)
        kept.extend(chosen_unknown)
        kept.extend(other)
        kept.extend(silence)

    dropped = {s.sample_id for s in out.samples} - {s.sample_id for s in kept}
    out.samples = kept
    out.splits = {sid: sp for sid, sp in new_splits.items() if sid not in dropped}
    return out


def _silence_clip(noise_bank: list[AudioClip], length: int,
                  max_volume: float, rng) -> AudioClip:
    if not noise_bank:
        return AudioClip(pcm=np.zeros(length, dtype=np.float32))
    clip = noise_bank[int(rng.integers(len(noise_bank)))]
    offset = int(rng.integers(max(1, len(clip.pcm))))
    segment = np.take(clip.pcm, offset + np.arange(length), mode="wrap")
    volume = np.float32(rng.uniform(0.0, max_volume))
    return AudioClip(pcm=np.clip(segment * volume, -1.0, 1.0),
                     sample_rate=clip.sample_rate)


SPLIT_CRITERIA = {
    "stable_hash": split_stable_hash,
    "random_split": split_random,
    "stratified": split_stratified,
    "list_file": split_list_file,
}


def apply_split(dataset: Dataset, criterion: str, config: SplitConfig,
                seed: int = 0, **kwargs) -> Dataset:
    """Assign every sample to a split using the named criterion."""
    try:
        fn = SPLIT_CRITERIA[criterion]
    except KeyError:
        raise RangeViolationError(
            f"unknown split criterion {criterion!r} "
            f"(available: {', '.join(sorted(SPLIT_CRITERIA))})") from None
    out = dataset.shallow_copy()
    out.splits = fn(dataset, config, seed, **kwargs)
    return out

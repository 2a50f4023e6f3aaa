"""Deterministic seed derivation for every source of randomness in a run.

A single master seed plus a stage coordinate (stage tag, epoch, batch index,
sample index) is mixed into a 64-bit seed with the SplitMix64 finalizer.
The packing of coordinates is injective over the supported ranges and the
finalizer is a bijection on u64, so distinct coordinates never collide.
The derivation is frozen: changing it invalidates recorded runs.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Frozen stage-tag codes. New tags may be appended, never renumbered.
STAGE_TAGS = {
    "sample": 1,
    "dataset": 2,
    "shuffle": 3,
    "batch": 4,
    "probe": 5,
    "split": 6,
    "silence": 7,
}

# Coordinate field widths (bits). epoch < 2^16, batch/sample < 2^20.
_EPOCH_BITS = 16
_BATCH_BITS = 20
_SAMPLE_BITS = 20


def derive_seed(master: int, stage_tag: str, epoch: int = 0,
                batch_index: int = 0, sample_index: int = 0) -> int:
    """Derive the u64 seed for one stage coordinate.

    Pure function of its arguments; used everywhere a transform, shuffle,
    or trainer needs randomness.
    """
    if stage_tag not in STAGE_TAGS:
        raise ValueError(f"unknown stage tag {stage_tag!r}")
    if not (0 <= epoch < (1 << _EPOCH_BITS)):
        raise ValueError(f"epoch {epoch} out of range")
    if not (0 <= batch_index < (1 << _BATCH_BITS)):
        raise ValueError(f"batch_index {batch_index} out of range")
    if not (0 <= sample_index < (1 << _SAMPLE_BITS)):
        raise ValueError(f"sample_index {sample_index} out of range")
    packed = (
        (STAGE_TAGS[stage_tag] << (_EPOCH_BITS + _BATCH_BITS + _SAMPLE_BITS))
        | (epoch << (_BATCH_BITS + _SAMPLE_BITS))
        | (batch_index << _SAMPLE_BITS)
        | sample_index
    )
    return _splitmix64(packed ^ (master & _MASK64))


def _splitmix64(z: int) -> int:
    """SplitMix64 finalizing mixer (a bijection on u64)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def substream(seed: int, index: int) -> int:
    """Derive the seed for the index-th consumer within one stage coordinate.

    Used when several transforms share a coordinate (e.g. two augmentations
    in the same section applied to the same sample) so their draws do not
    correlate. index+1 keeps substream(seed, 0) distinct from seed itself.
    """
    if index < 0:
        raise ValueError(f"substream index {index} out of range")
    return _splitmix64(seed ^ (((index + 1) * 0x9E3779B97F4A7C15) & _MASK64))


def rng_from_seed(seed: int) -> np.random.Generator:
    """The one RNG construction used package-wide (PCG64 keyed by the seed)."""
    return np.random.Generator(np.random.PCG64(seed))

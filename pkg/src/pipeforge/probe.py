"""Linear softmax probe: the small trainable head used to compare pipelines.

The probe mean-pools features over time frames (rank-1 payloads collapse to
a single scalar feature, which makes raw waveforms nearly uninformative by
construction) and fits W, b by plain SGD through the engine's batch
iterator, so batch-section transforms re-apply every epoch exactly as they
would for a real model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, as_tensor_rows
from .engine import ExternalSet, SeedPolicy, iterate_batches
from .errors import (
    DegenerateDataError,
    EmptySplitError,
    NonFiniteError,
)
from .metrics import confusion_matrix


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 30
    batch_size: int = 32
    master_seed: int = 0


@dataclass
class ProbeModel:
    """W: [n_classes, n_features] f32, b: [n_classes] f32."""

    W: np.ndarray
    b: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.W.shape[0]

    def logits(self, feats: np.ndarray) -> np.ndarray:
        return feats.astype(np.float64) @ self.W.astype(np.float64).T + self.b


def featurize(rows: np.ndarray) -> np.ndarray:
    """[B, T, C] -> [B, C] by mean over frames; [B, T] -> [B, 1]."""
    if rows.ndim < 2:
        raise DegenerateDataError(f"expected batched rows, got shape {rows.shape}")
    if rows.ndim == 2:
        return rows.mean(axis=1, dtype=np.float64)[:, None]
    flat = rows.reshape(rows.shape[0], -1, rows.shape[-1])
    return flat.mean(axis=1, dtype=np.float64)


def train_probe(train_data: Dataset, config: TrainConfig, loss_fn,
                batch_steps=(), n_classes: int | None = None,
                externals: ExternalSet | None = None) -> tuple[ProbeModel, list[float]]:
    """SGD on mean-pooled features; returns the model and per-epoch mean loss.

    loss_fn(logits [N, C], labels [N]) -> (batch-mean loss, gradient [N, C]
    already divided by N). Deterministic given (train_data, config).
    """
    if not train_data.samples:
        raise EmptySplitError("no training samples")
    labels = np.asarray([s.label for s in
                         sorted(train_data.samples, key=lambda s: s.sample_id)])
    if labels.dtype.kind not in "iu":
        raise DegenerateDataError("labels must be class indices; apply a class map first")
    distinct = np.unique(labels)
    if len(distinct) < 2:
        raise DegenerateDataError(
            f"training needs at least 2 classes, found {len(distinct)}")
    k = n_classes if n_classes is not None else int(labels.max()) + 1

    policy = SeedPolicy(master_seed=config.master_seed)
    probe_dim = featurize(as_tensor_rows(train_data)[:1]).shape[1]
    model = ProbeModel(W=np.zeros((k, probe_dim), dtype=np.float32),
                       b=np.zeros(k, dtype=np.float32))
    history: list[float] = []
    n = len(train_data.samples)
    for epoch in range(config.epochs):
        total = 0.0
        for batch in iterate_batches(train_data, config.batch_size, epoch,
                                     shuffle=True, steps=batch_steps,
                                     seed_policy=policy, externals=externals):
            feats = featurize(batch.tensor)
            logits = model.logits(feats)
            y = np.asarray(batch.labels)
            loss, grad = loss_fn(logits, y)
            total += loss * len(y)
            model.W = (model.W.astype(np.float64)
                       - config.learning_rate * grad.T @ feats).astype(np.float32)
            model.b = (model.b.astype(np.float64)
                       - config.learning_rate * grad.sum(axis=0)).astype(np.float32)
        epoch_loss = total / n
        if not (np.isfinite(epoch_loss) and np.isfinite(model.W).all()
                and np.isfinite(model.b).all()):
            raise NonFiniteError(f"training diverged at epoch {epoch}")
        history.append(float(epoch_loss))
    return model, history


def evaluate(model: ProbeModel, data: Dataset, accuracy_fn) -> tuple[float, np.ndarray]:
    """Accuracy via the given plugin plus a confusion matrix (rows = truth)."""
    if not data.samples:
        raise EmptySplitError("cannot evaluate an empty split")
    rows = as_tensor_rows(data)
    labels = np.asarray([s.label for s in
                         sorted(data.samples, key=lambda s: s.sample_id)])
    logits = model.logits(featurize(rows))
    accuracy = float(accuracy_fn(logits, labels))
    return accuracy, confusion_matrix(logits, labels, model.n_classes)


def split_view(data: Dataset, split: str) -> Dataset:
    """Sub-dataset of one split (all samples when no split was assigned)."""
    view = data.shallow_copy()
    if data.splits:
        view.samples = [s for s in data.samples
                        if data.splits.get(s.sample_id) == split]
    return view

"""Loss and accuracy primitives.

All reductions run in float64 regardless of input dtype; callers cast
results back to float32 where storage requires it.
"""

from __future__ import annotations

import numpy as np

from .errors import NonFiniteError, ShapeError


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction. Works on [C] or [N, C]."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over a batch and its gradient w.r.t. the logits.

    logits: [N, C] float, labels: [N] int. The gradient is
    (softmax - onehot) / N, float64, same shape as logits.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels)
    if z.ndim != 2:
        raise ShapeError(f"logits must be [N, C], got shape {z.shape}")
    if y.shape != (z.shape[0],):
        raise ShapeError(f"labels shape {y.shape} does not match logits rows {z.shape[0]}")
    if not np.all(np.isfinite(z)):
        raise NonFiniteError("non-finite logits")
    if np.any(y < 0) or np.any(y >= z.shape[1]):
        raise ShapeError(f"labels out of range for {z.shape[1]} classes")
    n = z.shape[0]
    p = softmax(z)
    # log-softmax evaluated directly for the picked class: stable for tiny p
    zs = z - np.max(z, axis=1, keepdims=True)
    log_norm = np.log(np.sum(np.exp(zs), axis=1))
    loss = float(np.mean(log_norm - zs[np.arange(n), y]))
    grad = p
    grad[np.arange(n), y] -= 1.0
    grad /= n
    return loss, grad


def top1_accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose argmax matches the label; ties break low index."""
    z = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels)
    if z.ndim != 2 or y.shape != (z.shape[0],):
        raise ShapeError(
            f"predictions [N, C] with labels [N] required, got {z.shape} / {y.shape}")
    if z.shape[0] == 0:
        raise ShapeError("empty batch has no accuracy")
    return float(np.mean(np.argmax(z, axis=1) == y))


def confusion_matrix(predictions: np.ndarray, labels: np.ndarray,
                     n_classes: int) -> np.ndarray:
    """[n_classes, n_classes] counts, rows = true label, cols = prediction."""
    z = np.asarray(predictions)
    y = np.asarray(labels)
    pred = np.argmax(z, axis=1) if z.ndim == 2 else z.astype(np.int64)
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (y, pred), 1)
    return m

"""Frame-level cross-entropy used as the recognition loss."""
from typing import Tuple

import numpy as np

from dcufront.autodiff import ops
from dcufront.autodiff.tensor import Tensor
from dcufront.core.errors import ShapeError, SignalError


def _check_labels(log_probs: Tensor, labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != log_probs.shape[:-1]:
        raise ShapeError("ce_proxy_loss.labels", log_probs.shape[:-1], labels.shape)
    num_classes = log_probs.shape[-1]
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        bad = labels[(labels < 0) | (labels >= num_classes)][0]
        raise SignalError(f"frame label {int(bad)} outside [0, {num_classes})")
    return labels.astype(np.int64)


def ce_proxy_loss(log_probs: Tensor, labels: np.ndarray) -> Tensor:
    """
    Mean negative log-probability of the labelled class.

    Args:
        log_probs: (N, frames, classes)
        labels: (N, frames) integers in [0, classes)

    Raises:
        SignalError: a label is out of range
    """
    labels = _check_labels(log_probs, labels)
    batch, frames = np.indices(labels.shape)
    picked = ops.index(log_probs, (batch, frames, labels))
    return ops.neg(ops.mean(picked))


def frame_accuracy(log_probs: np.ndarray, labels: np.ndarray) -> Tuple[int, int]:
    """(correct, total) frame counts of the arg-max prediction."""
    predictions = np.argmax(log_probs, axis=-1)
    labels = np.asarray(labels)
    return int(np.sum(predictions == labels)), int(labels.size)

"""Stacking prepared scenes into training batches."""
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from dcufront.core.errors import GeometryError
from dcufront.core.types import Bucket
from dcufront.scenes.supervision import PreparedScene


@dataclass
class Batch:
    """
    Prepared scenes stacked along a leading batch axis.

    Complex arrays: `mixture` (N, 3, bins, frames) holds mic1, mic2 and the
    reference; `echo_cancelled` (N, 2, bins, frames). Real arrays:
    `baseline_fbank` (N, mels, frames), `supervision` (N, bins, frames),
    `labels` (N, frames).
    """
    indices: List[int]
    buckets: List[Bucket]
    mixture: np.ndarray
    echo_cancelled: np.ndarray
    baseline_fbank: np.ndarray
    supervision: np.ndarray
    labels: np.ndarray

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def num_bins(self) -> int:
        return self.mixture.shape[2]

    @property
    def num_frames(self) -> int:
        return self.mixture.shape[3]

    @property
    def mic1_magnitude(self) -> np.ndarray:
        return np.abs(self.mixture[:, 0])


def collate(prepared: Sequence[PreparedScene]) -> Batch:
    """
    Raises:
        GeometryError: empty batch, or scenes with different frame counts
    """
    if not prepared:
        raise GeometryError("cannot collate an empty batch")
    frames = {p.num_frames for p in prepared}
    if len(frames) > 1:
        raise GeometryError(f"scenes in one batch must share a frame count, got {sorted(frames)}")
    return Batch(
        indices=[p.index for p in prepared],
        buckets=[p.bucket for p in prepared],
        mixture=np.stack([p.mixture for p in prepared]),
        echo_cancelled=np.stack([p.echo_cancelled for p in prepared]),
        baseline_fbank=np.stack([p.baseline_fbank for p in prepared]),
        supervision=np.stack([p.supervision for p in prepared]),
        labels=np.stack([p.frame_labels for p in prepared]),
    )

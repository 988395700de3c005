"""Single-channel baseline: AEC + delay-and-sum log-FBank into the acoustic model."""
from typing import Optional

import numpy as np

from dcufront.autodiff.tensor import Tensor
from dcufront.backend.acoustic_model import BackendConfig, BackendModel
from dcufront.core.types import SystemKind
from dcufront.dsp.fbank import NUM_MELS
from dcufront.systems.base import BaseSystem, SystemOutput, fbank_input
from dcufront.systems.batch import Batch


class BaselineSystem(BaseSystem):
    """Fixed signal-processing front-end; only the back-end is trained."""

    def __init__(
        self,
        backend: BackendConfig = BackendConfig(),
        rng: Optional[np.random.Generator] = None,
        dropout_p: float = 0.0,
        num_mels: int = NUM_MELS,
    ):
        super().__init__(dropout_p)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.backend = self.add_module("backend", BackendModel(backend.with_input(1, num_mels), rng))

    def forward(
        self,
        batch: Batch,
        enhancement: bool = True,
        rng: Optional[np.random.Generator] = None,
    ) -> SystemOutput:
        features = fbank_input(Tensor(batch.baseline_fbank))
        return SystemOutput(log_probs=self.recognise(features, rng))

    def get_system_kind(self) -> SystemKind:
        return SystemKind.BASELINE

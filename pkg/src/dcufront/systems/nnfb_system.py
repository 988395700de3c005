"""Neural fixed beamformer baseline: echo-cancelled mics, learned beams, acoustic model."""
from typing import Optional

import numpy as np

from dcufront.autodiff.complex import ComplexTensor
from dcufront.backend.acoustic_model import BackendConfig, BackendModel
from dcufront.core.types import ArrayGeometry, SystemKind
from dcufront.frontend.beamformer import superdirective_weights
from dcufront.frontend.nnfb import NeuralFixedBeamformer
from dcufront.systems.base import BaseSystem, SystemOutput, fbank_input
from dcufront.systems.batch import Batch


class NnfbSystem(BaseSystem):
    """Beam coefficients start from superdirective designs and train jointly with the back-end."""

    def __init__(
        self,
        num_bins: int,
        backend: BackendConfig = BackendConfig(),
        rng: Optional[np.random.Generator] = None,
        dropout_p: float = 0.0,
        geometry: ArrayGeometry = ArrayGeometry(),
        diagonal_loading: float = 1e-2,
        context: int = 5,
    ):
        super().__init__(dropout_p)
        rng = rng if rng is not None else np.random.default_rng(0)
        init = superdirective_weights(geometry, num_bins, diagonal_loading)
        self.nnfb = self.add_module("nnfb", NeuralFixedBeamformer(init, rng, context=context))
        self.backend = self.add_module(
            "backend", BackendModel(backend.with_input(1, self.nnfb.num_mels), rng)
        )

    def forward(
        self,
        batch: Batch,
        enhancement: bool = True,
        rng: Optional[np.random.Generator] = None,
    ) -> SystemOutput:
        features = self.nnfb(ComplexTensor.from_numpy(batch.echo_cancelled))
        return SystemOutput(log_probs=self.recognise(fbank_input(features), rng))

    def get_system_kind(self) -> SystemKind:
        return SystemKind.NNFB

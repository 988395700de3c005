"""DCUnet multi-task system: shared encoder, enhancement decoder and recognition branch."""
from typing import Optional

import numpy as np

from dcufront.autodiff import ops
from dcufront.autodiff.complex import ComplexTensor
from dcufront.backend.acoustic_model import BackendConfig, BackendModel
from dcufront.backend.bridge import bridge_complex_to_real
from dcufront.core.types import SystemKind
from dcufront.dcunet.model import DcunetConfig, DcunetModel
from dcufront.systems.base import BaseSystem, SystemOutput
from dcufront.systems.batch import Batch


class MtlSystem(BaseSystem):
    """
    The recognition branch taps the last encoder block.

    Its complex maps are bridged to twice as many real channels and
    repeated along time back to the STFT frame rate, so every frame label
    has a prediction. The decoder only runs while the enhancement task is
    active.
    """

    def __init__(
        self,
        num_bins: int,
        dcunet: DcunetConfig = DcunetConfig(),
        backend: BackendConfig = BackendConfig(),
        rng: Optional[np.random.Generator] = None,
        dropout_p: float = 0.0,
    ):
        super().__init__(dropout_p)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.dcunet = self.add_module("dcunet", DcunetModel(dcunet, rng))
        encoded_bins, _ = self.dcunet.encoded_size((num_bins, dcunet.min_frames))
        bridged_channels = 2 * dcunet.encoder_channels[-1]
        self.backend = self.add_module(
            "backend", BackendModel(backend.with_input(bridged_channels, encoded_bins), rng)
        )
        self.frame_factor = dcunet.min_frames

    def forward(
        self,
        batch: Batch,
        enhancement: bool = True,
        rng: Optional[np.random.Generator] = None,
    ) -> SystemOutput:
        x = ComplexTensor.from_numpy(batch.mixture)
        activations = self.dcunet.encode(x)
        enhanced = self.dcunet.decode(activations, x.shape[2:]) if enhancement else None
        bridged = bridge_complex_to_real(activations[-1])
        features = ops.upsample_frames(bridged, self.frame_factor, batch.num_frames)
        return SystemOutput(log_probs=self.recognise(features, rng), enhanced=enhanced)

    def get_system_kind(self) -> SystemKind:
        return SystemKind.MTL

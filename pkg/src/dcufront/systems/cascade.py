"""DCUnet cascade: enhanced spectrogram -> differentiable log-FBank -> acoustic model."""
from typing import Optional

import numpy as np

from dcufront.autodiff import ops
from dcufront.autodiff.complex import ComplexTensor, complex_power
from dcufront.backend.acoustic_model import BackendConfig, BackendModel
from dcufront.core.types import SystemKind
from dcufront.dcunet.model import DcunetConfig, DcunetModel
from dcufront.dsp.fbank import NUM_MELS, log_fbank_tensor, mel_filterbank
from dcufront.systems.base import BaseSystem, SystemOutput, fbank_input
from dcufront.systems.batch import Batch


class CascadeSystem(BaseSystem):
    """
    Enhancement and recognition in series.

    The recognition loss reaches the DCUnet through the feature extractor,
    so the whole chain trains on it; the enhancement output is always
    computed because recognition depends on it.
    """

    def __init__(
        self,
        num_bins: int,
        dcunet: DcunetConfig = DcunetConfig(),
        backend: BackendConfig = BackendConfig(),
        rng: Optional[np.random.Generator] = None,
        dropout_p: float = 0.0,
        num_mels: int = NUM_MELS,
    ):
        super().__init__(dropout_p)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.dcunet = self.add_module("dcunet", DcunetModel(dcunet, rng))
        self.backend = self.add_module("backend", BackendModel(backend.with_input(1, num_mels), rng))
        self.filters = mel_filterbank(num_mels, fft_size=2 * (num_bins - 1))

    def forward(
        self,
        batch: Batch,
        enhancement: bool = True,
        rng: Optional[np.random.Generator] = None,
    ) -> SystemOutput:
        enhanced = self.dcunet(ComplexTensor.from_numpy(batch.mixture))
        n, _, f, t = enhanced.shape
        power = ops.reshape(complex_power(enhanced), (n, f, t))
        features = log_fbank_tensor(power, self.filters, bin_axis=1)
        return SystemOutput(log_probs=self.recognise(fbank_input(features), rng), enhanced=enhanced)

    def get_system_kind(self) -> SystemKind:
        return SystemKind.CASCADE

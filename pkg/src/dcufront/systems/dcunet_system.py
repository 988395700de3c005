"""Stand-alone DCUnet, trained on the enhancement loss only."""
from typing import Optional

import numpy as np

from dcufront.autodiff.complex import ComplexTensor
from dcufront.autodiff.nn import Module
from dcufront.core.types import SystemKind
from dcufront.dcunet.model import DcunetConfig, DcunetModel
from dcufront.systems.base import BaseSystem, SystemOutput
from dcufront.systems.batch import Batch


class DcunetSystem(BaseSystem):
    """DCUnet pretraining system; its checkpoints hold only enc1..enc4 and dec1..dec4."""

    def __init__(self, config: DcunetConfig = DcunetConfig(), rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.dcunet = self.add_module("dcunet", DcunetModel(config, rng))

    def forward(
        self,
        batch: Batch,
        enhancement: bool = True,
        rng: Optional[np.random.Generator] = None,
    ) -> SystemOutput:
        x = ComplexTensor.from_numpy(batch.mixture)
        return SystemOutput(enhanced=self.dcunet(x))

    def get_system_kind(self) -> SystemKind:
        return SystemKind.DCUNET

    def checkpoint_module(self) -> Module:
        return self.dcunet

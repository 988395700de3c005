"""Base system interface."""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Mapping, Optional

import numpy as np

from dcufront.autodiff import ops
from dcufront.autodiff.complex import ComplexTensor
from dcufront.autodiff.nn import Module
from dcufront.autodiff.tensor import Tensor
from dcufront.backend.acoustic_model import BackendModel
from dcufront.backend.dropout import apply_dropout
from dcufront.core.errors import ConfigError
from dcufront.core.types import SystemKind
from dcufront.dcunet.model import DcunetModel
from dcufront.systems.batch import Batch


@dataclass
class SystemOutput:
    """Heads of one forward pass; a head the system lacks (or skipped) is None."""
    log_probs: Optional[Tensor] = None
    enhanced: Optional[ComplexTensor] = None


class BaseSystem(Module, ABC):
    """
    Abstract base class for the trainable systems.

    All systems (DCUnet pretraining, baseline, NNFB, cascade, MTL) map a
    Batch to a SystemOutput and expose the module whose state goes into
    checkpoints.
    """

    def __init__(self, dropout_p: float = 0.0):
        super().__init__()
        if not 0.0 <= dropout_p < 1.0:
            raise ConfigError("schedule.dropout_p", f"must lie in [0, 1), got {dropout_p}")
        self.dropout_p = dropout_p
        self.dcunet: Optional[DcunetModel] = None
        self.backend: Optional[BackendModel] = None

    @abstractmethod
    def forward(
        self,
        batch: Batch,
        enhancement: bool = True,
        rng: Optional[np.random.Generator] = None,
    ) -> SystemOutput:
        """
        Run the system on a batch.

        Args:
            batch: Stacked prepared scenes
            enhancement: Evaluate the enhancement head (when the system has one)
            rng: Dropout randomness; required only in training mode with dropout

        Returns:
            SystemOutput with the heads this system provides
        """
        pass

    @abstractmethod
    def get_system_kind(self) -> SystemKind:
        pass

    def checkpoint_module(self) -> Module:
        """Module whose state_dict is written to checkpoints."""
        return self

    def decoder_parameter_names(self) -> List[str]:
        """Names (as in checkpoint_module) of enhancement-decoder parameters."""
        if self.dcunet is None:
            return []
        prefix = "" if self.checkpoint_module() is self.dcunet else "dcunet."
        return [
            prefix + name
            for name in self.dcunet.named_parameters()
            if name.startswith("dec")
        ]

    def init_from(self, state: Mapping[str, np.ndarray]) -> List[str]:
        """
        Initialise the DCUnet part from a pretrained DCUnet state.

        Raises:
            ConfigError: the system has no DCUnet
            ParameterMismatchError: the state does not fit this DCUnet
        """
        if self.dcunet is None:
            raise ConfigError("schedule.init_source", f"{self.get_system_kind().value} has no DCUnet to initialise")
        return self.dcunet.load_state_dict(state, strict=True)

    def recognise(self, features: Tensor, rng: Optional[np.random.Generator]) -> Tensor:
        """Dropout (training only) followed by the back-end."""
        if self.training and self.dropout_p > 0.0 and rng is None:
            raise ConfigError("schedule.seed", "dropout in training mode needs a random generator")
        features = apply_dropout(features, self.dropout_p, self.training, rng)
        return self.backend(features)


def fbank_input(features: Tensor) -> Tensor:
    """(N, mels, frames) -> (N, 1, mels, frames) for the back-end."""
    n, m, t = features.shape
    return ops.reshape(features, (n, 1, m, t))

"""Inverted dropout in front of the acoustic model."""
import numpy as np

from dcufront.autodiff import ops
from dcufront.autodiff.tensor import Tensor
from dcufront.core.errors import ConfigError


def apply_dropout(features: Tensor, p: float, training: bool, rng: np.random.Generator) -> Tensor:
    """
    Zero each element with probability `p` and rescale survivors by 1 / (1 - p).

    Identity (the same tensor) at inference or when p == 0.

    Raises:
        ConfigError: p outside [0, 1)
    """
    if not 0.0 <= p < 1.0:
        raise ConfigError("schedule.dropout_p", f"must lie in [0, 1), got {p}")
    if not training or p == 0.0:
        return features
    keep = rng.random(features.shape) >= p
    return ops.mul(features, Tensor(keep / (1.0 - p)))

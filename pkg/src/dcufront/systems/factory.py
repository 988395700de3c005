"""Building systems from a run configuration."""
from typing import Optional, Union

import numpy as np

from dcufront.config import RunConfig
from dcufront.core.errors import ConfigError
from dcufront.core.types import SystemKind
from dcufront.systems.base import BaseSystem
from dcufront.systems.baseline import BaselineSystem
from dcufront.systems.cascade import CascadeSystem
from dcufront.systems.dcunet_system import DcunetSystem
from dcufront.systems.mtl import MtlSystem
from dcufront.systems.nnfb_system import NnfbSystem


def parse_system_kind(name: Union[str, SystemKind]) -> SystemKind:
    """
    Raises:
        ConfigError: unknown system name
    """
    if isinstance(name, SystemKind):
        return name
    try:
        return SystemKind(name.lower())
    except ValueError:
        choices = ", ".join(k.value for k in SystemKind)
        raise ConfigError("system", f"expected one of {choices}, got {name!r}") from None


def build_system(
    kind: Union[str, SystemKind],
    config: RunConfig,
    rng: Optional[np.random.Generator] = None,
) -> BaseSystem:
    """
    Fresh system with parameters drawn from `rng` (default: seeded from the schedule).

    Raises:
        ConfigError: the configuration does not validate
    """
    config.validate()
    kind = parse_system_kind(kind)
    rng = rng if rng is not None else np.random.default_rng(config.schedule.seed)
    preset = config.model
    num_bins = config.stft.num_bins
    dropout = config.schedule.dropout_p
    if kind is SystemKind.DCUNET:
        return DcunetSystem(preset.dcunet, rng)
    if kind is SystemKind.BASELINE:
        return BaselineSystem(preset.backend, rng, dropout)
    if kind is SystemKind.NNFB:
        return NnfbSystem(
            num_bins, preset.backend, rng, dropout,
            diagonal_loading=preset.diagonal_loading, context=preset.nnfb_context,
        )
    if kind is SystemKind.CASCADE:
        return CascadeSystem(num_bins, preset.dcunet, preset.backend, rng, dropout)
    return MtlSystem(num_bins, preset.dcunet, preset.backend, rng, dropout)

"""Weighting of the recognition and enhancement losses over epochs."""
from typing import Union

from dcufront.autodiff import ops
from dcufront.autodiff.tensor import Tensor
from dcufront.core.types import TrainSchedule

Loss = Union[float, Tensor]


def mtl_loss(l_asr: Loss, l_enh: Loss, t: int, schedule: TrainSchedule) -> Loss:
    """
    (1 - beta) * L_asr + beta * L_enh while t <= t_enh, then L_asr alone.

    Works on plain floats and on tensors (keeping the graph).
    """
    if not schedule.enhancement_active(t):
        return l_asr
    beta = schedule.beta
    if isinstance(l_asr, Tensor) or isinstance(l_enh, Tensor):
        return ops.add(ops.scale(l_asr, 1.0 - beta), ops.scale(l_enh, beta))
    return (1.0 - beta) * l_asr + beta * l_enh

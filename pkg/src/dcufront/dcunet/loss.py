"""Magnitude regression loss for the enhancement head."""
from typing import Union

import numpy as np

from dcufront.autodiff import ops
from dcufront.autodiff.complex import ComplexTensor, complex_abs
from dcufront.autodiff.tensor import Tensor, as_tensor
from dcufront.core.errors import ShapeError
from dcufront.core.types import Spectrogram


def _squeezed(shape) -> tuple:
    return tuple(d for d in shape if d != 1)


def enhancement_loss(
    prediction: Union[ComplexTensor, Spectrogram],
    supervision: Union[Tensor, np.ndarray],
) -> Tensor:
    """
    mean((M_sup - |O|)^2) over all elements.

    Args:
        prediction: Predicted complex spectrogram, (N, 1, bins, frames) or a Spectrogram
        supervision: Target magnitude; singleton axes may be omitted

    Raises:
        ShapeError: geometries differ
    """
    if isinstance(prediction, Spectrogram):
        prediction = ComplexTensor.from_numpy(prediction.data)
    magnitude = complex_abs(prediction)
    target = as_tensor(supervision)
    if target.shape != magnitude.shape:
        if _squeezed(target.shape) != _squeezed(magnitude.shape):
            raise ShapeError("enhancement_loss", magnitude.shape, target.shape, "supervision magnitude")
        target = Tensor(target.data.reshape(magnitude.shape))
    return ops.mean(ops.square(ops.sub(target, magnitude)))

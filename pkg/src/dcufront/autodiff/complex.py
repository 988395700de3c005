"""Complex values as planar (real, imaginary) tensor pairs."""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from dcufront.autodiff import ops
from dcufront.autodiff.tensor import Tensor
from dcufront.core.errors import ShapeError


@dataclass
class ComplexTensor:
    """Two real tensors of identical shape holding the real and imaginary planes."""
    real: Tensor
    imag: Tensor

    def __post_init__(self):
        if self.real.shape != self.imag.shape:
            raise ShapeError("ComplexTensor", self.real.shape, self.imag.shape, "imaginary plane")

    @classmethod
    def from_numpy(cls, values: np.ndarray, requires_grad: bool = False) -> "ComplexTensor":
        return cls(
            Tensor(np.real(values), requires_grad=requires_grad),
            Tensor(np.imag(values), requires_grad=requires_grad),
        )

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.real.shape

    def numpy(self) -> np.ndarray:
        return self.real.data + 1j * self.imag.data

    def __add__(self, other: "ComplexTensor") -> "ComplexTensor":
        return ComplexTensor(ops.add(self.real, other.real), ops.add(self.imag, other.imag))

    def __getitem__(self, key) -> "ComplexTensor":
        return ComplexTensor(ops.index(self.real, key), ops.index(self.imag, key))


def complex_concat(values: Sequence[ComplexTensor], axis: int = 1) -> ComplexTensor:
    return ComplexTensor(
        ops.concat([v.real for v in values], axis=axis),
        ops.concat([v.imag for v in values], axis=axis),
    )


def complex_leaky_relu(value: ComplexTensor, slope: float = 0.1) -> ComplexTensor:
    """Leaky ReLU applied to each plane independently."""
    return ComplexTensor(ops.leaky_relu(value.real, slope), ops.leaky_relu(value.imag, slope))


def complex_abs(value: ComplexTensor) -> Tensor:
    return ops.complex_abs(value.real, value.imag)


def complex_power(value: ComplexTensor) -> Tensor:
    return ops.add(ops.square(value.real), ops.square(value.imag))

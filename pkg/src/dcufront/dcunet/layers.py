"""Complex-valued layers acting on planar (real, imaginary) tensors."""
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from dcufront.autodiff import ops
from dcufront.autodiff.complex import ComplexTensor
from dcufront.autodiff.nn import BatchNorm2d, Module, he_normal
from dcufront.autodiff.ops import Pair, _pair
from dcufront.autodiff.tensor import Tensor
from dcufront.core.errors import GeometryError, ShapeError
from dcufront.core.types import Spectrogram


def complex_conv2d(
    x: ComplexTensor,
    weight_real: Tensor,
    weight_imag: Tensor,
    stride: Pair = 1,
    padding: Pair = 0,
    bias_real: Optional[Tensor] = None,
    bias_imag: Optional[Tensor] = None,
) -> ComplexTensor:
    """
    Complex convolution as four real convolutions.

    real = Wr*R - Wi*I and imag = Wr*I + Wi*R, i.e. ordinary complex
    multiplication of W = Wr + iWi with X = R + iI at every tap.
    """
    real = ops.sub(
        ops.conv2d(x.real, weight_real, bias_real, stride, padding),
        ops.conv2d(x.imag, weight_imag, None, stride, padding),
    )
    imag = ops.add(
        ops.conv2d(x.imag, weight_real, bias_imag, stride, padding),
        ops.conv2d(x.real, weight_imag, None, stride, padding),
    )
    return ComplexTensor(real, imag)


def complex_conv_transpose2d(
    x: ComplexTensor,
    weight_real: Tensor,
    weight_imag: Tensor,
    stride: Pair = 1,
    padding: Pair = 0,
    output_padding: Pair = 0,
    bias_real: Optional[Tensor] = None,
    bias_imag: Optional[Tensor] = None,
) -> ComplexTensor:
    """Transposed counterpart of `complex_conv2d`, same sign layout."""
    real = ops.sub(
        ops.conv_transpose2d(x.real, weight_real, bias_real, stride, padding, output_padding),
        ops.conv_transpose2d(x.imag, weight_imag, None, stride, padding, output_padding),
    )
    imag = ops.add(
        ops.conv_transpose2d(x.imag, weight_real, bias_imag, stride, padding, output_padding),
        ops.conv_transpose2d(x.real, weight_imag, None, stride, padding, output_padding),
    )
    return ComplexTensor(real, imag)


class ComplexConv2d(Module):
    """Complex convolution with "same" padding (half the kernel on each side)."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: Pair,
        rng: np.random.Generator,
        stride: Pair = 1,
        bias: bool = False,
    ):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = _pair(kernel_size)
        self.stride = _pair(stride)
        self.padding = tuple(k // 2 for k in self.kernel_size)
        kh, kw = self.kernel_size
        shape = (out_channels, in_channels, kh, kw)
        fan_in = in_channels * kh * kw
        self.weight_real = self.register_parameter("weight_real", he_normal(rng, shape, fan_in, 1.0))
        self.weight_imag = self.register_parameter("weight_imag", he_normal(rng, shape, fan_in, 1.0))
        self.bias_real = self.register_parameter("bias_real", np.zeros(out_channels)) if bias else None
        self.bias_imag = self.register_parameter("bias_imag", np.zeros(out_channels)) if bias else None

    def output_size(self, size: Tuple[int, int]) -> Tuple[int, int]:
        return tuple(
            ops.conv_output_size(n, k, s, p)
            for n, k, s, p in zip(size, self.kernel_size, self.stride, self.padding)
        )

    def forward(self, x: ComplexTensor) -> ComplexTensor:
        return complex_conv2d(
            x, self.weight_real, self.weight_imag, self.stride, self.padding,
            self.bias_real, self.bias_imag,
        )


class ComplexConvTranspose2d(Module):
    """
    Complex transposed convolution that restores a requested output size.

    The output padding is derived per call from the target size, which
    must be reachable with 0 <= output_padding < stride.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: Pair,
        rng: np.random.Generator,
        stride: Pair = 1,
        bias: bool = False,
    ):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = _pair(kernel_size)
        self.stride = _pair(stride)
        self.padding = tuple(k // 2 for k in self.kernel_size)
        kh, kw = self.kernel_size
        shape = (in_channels, out_channels, kh, kw)
        fan_in = max(in_channels * kh * kw // (self.stride[0] * self.stride[1]), 1)
        self.weight_real = self.register_parameter("weight_real", he_normal(rng, shape, fan_in, 1.0))
        self.weight_imag = self.register_parameter("weight_imag", he_normal(rng, shape, fan_in, 1.0))
        self.bias_real = self.register_parameter("bias_real", np.zeros(out_channels)) if bias else None
        self.bias_imag = self.register_parameter("bias_imag", np.zeros(out_channels)) if bias else None

    def output_padding(self, size: Tuple[int, int], target: Tuple[int, int]) -> Tuple[int, int]:
        padding = []
        for n, k, s, p, want in zip(size, self.kernel_size, self.stride, self.padding, target):
            extra = want - ops.conv_transpose_output_size(n, k, s, p)
            if not 0 <= extra < s:
                raise GeometryError(f"cannot upsample {n} to {want} with kernel {k}, stride {s}")
            padding.append(extra)
        return tuple(padding)

    def forward(self, x: ComplexTensor, output_size: Optional[Tuple[int, int]] = None) -> ComplexTensor:
        op = (0, 0) if output_size is None else self.output_padding(x.shape[2:], output_size)
        return complex_conv_transpose2d(
            x, self.weight_real, self.weight_imag, self.stride, self.padding, op,
            self.bias_real, self.bias_imag,
        )


class ComplexBatchNorm2d(Module):
    """Independent batch normalisation of the real and imaginary planes."""

    def __init__(self, num_features: int):
        super().__init__()
        self.real = self.add_module("real", BatchNorm2d(num_features))
        self.imag = self.add_module("imag", BatchNorm2d(num_features))

    def forward(self, x: ComplexTensor) -> ComplexTensor:
        return ComplexTensor(self.real(x.real), self.imag(x.imag))


ChannelInput = Union[Spectrogram, np.ndarray]


def _as_channel(value: ChannelInput) -> np.ndarray:
    if isinstance(value, Spectrogram):
        if value.num_channels != 1:
            raise GeometryError(f"expected a single-channel spectrogram, got {value.num_channels}")
        return value.data[0]
    return np.asarray(value)


def stack_channels(channels: Sequence[ChannelInput]) -> ComplexTensor:
    """
    Stack single-channel spectrograms (bins, frames) as input channels of a batch of one.

    Raises:
        GeometryError: channel geometries differ
    """
    arrays = [_as_channel(c) for c in channels]
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise GeometryError(f"input channels differ in geometry: {sorted(shapes)}")
    return ComplexTensor.from_numpy(np.stack(arrays)[None])


def multichannel_input_layer(
    mic1: ChannelInput, mic2: ChannelInput, reference: ChannelInput, conv: ComplexConv2d
) -> ComplexTensor:
    """
    First complex convolution over the {mic1, mic2, reference} channel stack.

    Returns the pre-activation output of `conv` (batch of one).
    """
    x = stack_channels([mic1, mic2, reference])
    if conv.in_channels != 3:
        raise ShapeError("multichannel_input_layer", (conv.in_channels,), (3,), "input channels")
    return conv(x)

"""Multi-channel Deep Complex U-Net."""
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from dcufront.autodiff.complex import ComplexTensor, complex_concat, complex_leaky_relu
from dcufront.autodiff.nn import Module
from dcufront.autodiff.tensor import no_grad
from dcufront.core.errors import GeometryError, ShapeError
from dcufront.core.types import Spectrogram
from dcufront.dcunet.layers import (
    ComplexBatchNorm2d,
    ComplexConv2d,
    ComplexConvTranspose2d,
    stack_channels,
)

Kernel = Tuple[int, int]


@dataclass(frozen=True)
class DcunetConfig:
    """Encoder widths and kernels; the decoder mirrors them."""
    encoder_channels: Tuple[int, ...] = (16, 32, 64, 64)
    encoder_kernels: Tuple[Kernel, ...] = ((7, 5), (7, 5), (7, 5), (5, 3))
    stride: Kernel = (2, 2)
    in_channels: int = 3
    out_channels: int = 1
    leaky_slope: float = 0.1

    @property
    def depth(self) -> int:
        return len(self.encoder_channels)

    @property
    def min_frames(self) -> int:
        return self.stride[1] ** self.depth

    @classmethod
    def tiny(cls) -> "DcunetConfig":
        """Same topology with narrow layers, for gradient checks."""
        return cls(encoder_channels=(2, 4, 4, 4))

    def with_channels(self, encoder_channels: Tuple[int, ...]) -> "DcunetConfig":
        return replace(self, encoder_channels=tuple(encoder_channels))


class EncoderBlock(Module):
    """Strided complex convolution, split batch norm, leaky ReLU."""

    def __init__(self, in_channels: int, out_channels: int, kernel: Kernel, stride: Kernel,
                 slope: float, rng: np.random.Generator):
        super().__init__()
        self.slope = slope
        self.conv = self.add_module("conv", ComplexConv2d(in_channels, out_channels, kernel, rng, stride))
        self.bn = self.add_module("bn", ComplexBatchNorm2d(out_channels))

    def forward(self, x: ComplexTensor) -> ComplexTensor:
        return complex_leaky_relu(self.bn(self.conv(x)), self.slope)


class DecoderBlock(Module):
    """Transposed complex convolution; the final block has a bias and no norm or activation."""

    def __init__(self, in_channels: int, out_channels: int, kernel: Kernel, stride: Kernel,
                 slope: float, rng: np.random.Generator, final: bool = False):
        super().__init__()
        self.slope = slope
        self.final = final
        self.deconv = self.add_module(
            "deconv", ComplexConvTranspose2d(in_channels, out_channels, kernel, rng, stride, bias=final)
        )
        self.bn = None if final else self.add_module("bn", ComplexBatchNorm2d(out_channels))

    def forward(self, x: ComplexTensor, output_size: Tuple[int, int]) -> ComplexTensor:
        y = self.deconv(x, output_size)
        if self.final:
            return y
        return complex_leaky_relu(self.bn(y), self.slope)


class DcunetModel(Module):
    """
    Complex U-Net over {mic1, mic2, reference} STFTs predicting one complex spectrogram.

    Encoder blocks are `enc1`..`enc4`; decoder blocks `dec1`..`dec4`. Each
    decoder block after the first takes the previous decoder output
    concatenated with the matching encoder activation, and every decoder
    output is restored to the geometry of the encoder stage it mirrors.
    """

    def __init__(self, config: DcunetConfig = DcunetConfig(), rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.config = config
        channels, kernels = config.encoder_channels, config.encoder_kernels
        if len(kernels) != len(channels):
            raise ShapeError("DcunetConfig.encoder_kernels", (len(channels),), (len(kernels),))

        self.encoders: List[EncoderBlock] = []
        previous = config.in_channels
        for i, (width, kernel) in enumerate(zip(channels, kernels)):
            block = EncoderBlock(previous, width, kernel, config.stride, config.leaky_slope, rng)
            self.encoders.append(self.add_module(f"enc{i + 1}", block))
            previous = width

        self.decoders: List[DecoderBlock] = []
        depth = config.depth
        for i in range(depth):
            level = depth - 1 - i
            in_width = channels[level] if i == 0 else 2 * channels[level]
            final = level == 0
            out_width = config.out_channels if final else channels[level - 1]
            block = DecoderBlock(
                in_width, out_width, kernels[level], config.stride, config.leaky_slope, rng, final
            )
            self.decoders.append(self.add_module(f"dec{i + 1}", block))

    def check_input(self, x: ComplexTensor):
        if x.real.ndim != 4 or x.shape[1] != self.config.in_channels:
            raise ShapeError(
                "dcunet.input", ("N", self.config.in_channels, "bins", "frames"), x.shape
            )
        if x.shape[3] < self.config.min_frames:
            raise GeometryError(
                f"input has {x.shape[3]} frames; at least {self.config.min_frames} are needed "
                f"for {self.config.depth} stride-{self.config.stride[1]} stages"
            )

    def encoded_size(self, size: Tuple[int, int]) -> Tuple[int, int]:
        """(bins, frames) after the last encoder block."""
        for block in self.encoders:
            size = block.conv.output_size(size)
        return size

    def encode(self, x: ComplexTensor) -> List[ComplexTensor]:
        """Activations of every encoder block, shallowest first."""
        self.check_input(x)
        activations = []
        for block in self.encoders:
            x = block(x)
            activations.append(x)
        return activations

    def decode(self, activations: List[ComplexTensor], output_size: Tuple[int, int]) -> ComplexTensor:
        depth = self.config.depth
        y = activations[-1]
        for i, block in enumerate(self.decoders):
            level = depth - 1 - i
            if i > 0:
                y = complex_concat([y, activations[level]], axis=1)
            target = output_size if level == 0 else activations[level - 1].shape[2:]
            y = block(y, target)
        return y

    def forward(self, x: ComplexTensor) -> ComplexTensor:
        """
        Args:
            x: (N, 3, bins, frames)

        Returns:
            (N, 1, bins, frames) predicted complex spectrogram
        """
        return self.decode(self.encode(x), x.shape[2:])


def dcunet_forward(model: DcunetModel, mic1, mic2, reference) -> Spectrogram:
    """Inference on one utterance: three single-channel spectrograms in, one out."""
    x = stack_channels([mic1, mic2, reference])
    with no_grad():
        out = model(x)
    data = out.numpy()[0]
    template = mic1 if isinstance(mic1, Spectrogram) else None
    if template is not None:
        return template.with_data(data)
    return Spectrogram(data, fft_size=2 * (data.shape[1] - 1))

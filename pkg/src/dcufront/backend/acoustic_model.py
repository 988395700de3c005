"""Frame-level acoustic model: two strided CNN layers, a TDNN stack and log-softmax."""
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from dcufront.autodiff import ops
from dcufront.autodiff.nn import BatchNorm2d, Conv2d, Module
from dcufront.autodiff.tensor import Tensor
from dcufront.core.errors import ShapeError

Kernel = Tuple[int, int]


@dataclass(frozen=True)
class BackendConfig:
    """
    Back-end dimensions.

    Convolutions stride by 2 along frequency only, so the frame rate is
    kept and every input frame gets a prediction. TDNN layers are temporal
    convolutions spanning frames t - context .. t + context.
    """
    in_channels: int = 1
    in_bins: int = 80
    conv_channels: Tuple[int, int] = (64, 128)
    conv_kernels: Tuple[Kernel, Kernel] = ((5, 3), (3, 3))
    conv_stride: Kernel = (2, 1)
    tdnn_layers: int = 4
    hidden: int = 64
    num_classes: int = 8
    context: int = 2
    dilation: int = 1

    @classmethod
    def desk(cls) -> "BackendConfig":
        return cls()

    @classmethod
    def full(cls) -> "BackendConfig":
        return cls(tdnn_layers=12, hidden=1024, num_classes=2888)

    @classmethod
    def tiny(cls) -> "BackendConfig":
        return cls(in_bins=12, conv_channels=(3, 4), tdnn_layers=2, hidden=5, num_classes=4)

    def with_input(self, in_channels: int, in_bins: int) -> "BackendConfig":
        return replace(self, in_channels=in_channels, in_bins=in_bins)

    @property
    def conv_paddings(self) -> List[Kernel]:
        return [(kh // 2, kw // 2) for kh, kw in self.conv_kernels]

    @property
    def flat_bins(self) -> int:
        """Frequency rows left after both convolutions."""
        bins = self.in_bins
        for (kh, _), (ph, _) in zip(self.conv_kernels, self.conv_paddings):
            bins = ops.conv_output_size(bins, kh, self.conv_stride[0], ph)
        return bins


class ConvBnRelu(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel: Kernel, rng: np.random.Generator,
                 stride: Kernel = (1, 1), padding: Optional[Kernel] = None, dilation: Kernel = (1, 1)):
        super().__init__()
        self.conv = self.add_module(
            "conv", Conv2d(in_channels, out_channels, kernel, rng, stride, padding, dilation, bias=False)
        )
        self.bn = self.add_module("bn", BatchNorm2d(out_channels))

    def forward(self, x: Tensor) -> Tensor:
        return ops.relu(self.bn(self.conv(x)))


class BackendModel(Module):
    """
    Real-valued CNN + TDNN acoustic model.

    Input (N, C, bins, frames); output (N, frames, classes) log-probabilities.
    """

    def __init__(self, config: BackendConfig = BackendConfig(), rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.config = config
        c1, c2 = config.conv_channels
        (k1, k2), (p1, p2) = config.conv_kernels, config.conv_paddings
        self.conv1 = self.add_module(
            "conv1", ConvBnRelu(config.in_channels, c1, k1, rng, config.conv_stride, p1)
        )
        self.conv2 = self.add_module("conv2", ConvBnRelu(c1, c2, k2, rng, config.conv_stride, p2))

        width = 2 * config.context + 1
        padding = (0, config.context * config.dilation)
        previous = c2 * config.flat_bins
        self.tdnn: List[ConvBnRelu] = []
        for i in range(config.tdnn_layers - 1):
            layer = ConvBnRelu(previous, config.hidden, (1, width), rng, padding=padding,
                               dilation=(1, config.dilation))
            self.tdnn.append(self.add_module(f"tdnn{i + 1}", layer))
            previous = config.hidden
        self.output = self.add_module("output", Conv2d(previous, config.num_classes, (1, 1), rng))

    def forward(self, features: Tensor) -> Tensor:
        """
        Raises:
            ShapeError: feature channels or bins do not match the configuration
        """
        n, c, f, t = features.shape
        if (c, f) != (self.config.in_channels, self.config.in_bins):
            raise ShapeError(
                "backend.input", (n, self.config.in_channels, self.config.in_bins, t), features.shape
            )
        x = self.conv2(self.conv1(features))
        x = ops.reshape(x, (n, x.shape[1] * x.shape[2], 1, t))
        for layer in self.tdnn:
            x = layer(x)
        logits = ops.reshape(self.output(x), (n, self.config.num_classes, t))
        return ops.log_softmax(ops.transpose(logits, (0, 2, 1)), axis=-1)


def backend_forward(model: BackendModel, features: Tensor) -> Tensor:
    return model(features)

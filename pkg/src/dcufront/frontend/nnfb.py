"""Neural fixed beamformer: trainable multi-look beamforming with learned beam selection."""
from typing import Callable, Optional

import numpy as np

from dcufront.autodiff import ops
from dcufront.autodiff.complex import ComplexTensor
from dcufront.autodiff.nn import Conv2d, Module
from dcufront.autodiff.tensor import Tensor, no_grad
from dcufront.core.errors import GeometryError, ShapeError
from dcufront.core.types import FbankFeatures, Spectrogram
from dcufront.dsp.fbank import NUM_MELS, log_fbank_tensor, mel_filterbank
from dcufront.frontend.beamformer import BeamformerWeights

Selector = Callable[[Tensor], Tensor]


class NeuralFixedBeamformer(Module):
    """
    Fixed beamformer bank whose coefficients are trainable, followed by a
    per-frame soft selection over look directions.

    Coefficients start from a designed weight set (superdirective by
    default). Each direction yields a log-FBank stream; a temporal
    convolution over all streams predicts softmax weights per frame and the
    output is the weighted sum of the streams.
    """

    def __init__(
        self,
        init: BeamformerWeights,
        rng: np.random.Generator,
        num_mels: int = NUM_MELS,
        context: int = 5,
    ):
        super().__init__()
        self.num_directions = init.num_directions
        self.num_channels = init.num_channels
        self.num_bins = init.num_bins
        self.num_mels = num_mels
        self.weight_real = self.register_parameter("weight_real", init.weights.real)
        self.weight_imag = self.register_parameter("weight_imag", init.weights.imag)
        self.selector = self.add_module(
            "selector",
            Conv2d(self.num_directions * num_mels, self.num_directions, (1, context), rng),
        )
        self.filters = mel_filterbank(num_mels, fft_size=2 * (self.num_bins - 1))

    def directional_features(self, x: ComplexTensor) -> Tensor:
        """
        Log-FBank of every beam.

        Args:
            x: (N, channels, bins, frames) after echo cancellation

        Returns:
            (N, directions, num_mels, frames)
        """
        n, c, f, t = x.shape
        if (c, f) != (self.num_channels, self.num_bins):
            raise ShapeError("nnfb.input", (n, self.num_channels, self.num_bins, t), x.shape)
        shape_w = (1, self.num_directions, c, f, 1)
        shape_x = (n, 1, c, f, t)
        wr = ops.reshape(self.weight_real, shape_w)
        wi = ops.reshape(self.weight_imag, shape_w)
        xr = ops.reshape(x.real, shape_x)
        xi = ops.reshape(x.imag, shape_x)
        beam_real = ops.sum(ops.add(ops.mul(wr, xr), ops.mul(wi, xi)), axis=2)
        beam_imag = ops.sum(ops.sub(ops.mul(wr, xi), ops.mul(wi, xr)), axis=2)
        power = ops.add(ops.square(beam_real), ops.square(beam_imag))
        return log_fbank_tensor(power, self.filters, bin_axis=2)

    def select(self, features: Tensor) -> Tensor:
        """Per-frame direction weights (N, directions, frames), summing to 1 over directions."""
        n, d, m, t = features.shape
        logits = self.selector(ops.reshape(features, (n, d * m, 1, t)))
        return ops.softmax(ops.reshape(logits, (n, d, t)), axis=1)

    def forward(self, x: ComplexTensor, selector: Optional[Selector] = None) -> Tensor:
        """
        Returns:
            (N, num_mels, frames) convex combination of the directional features

        Raises:
            ShapeError: the selector does not produce one weight per direction
        """
        features = self.directional_features(x)
        n, d, _, t = features.shape
        weights = (selector or self.select)(features)
        if weights.shape != (n, d, t):
            raise ShapeError("nnfb.selector", (n, d, t), weights.shape, "one weight per direction")
        weights = ops.reshape(weights, (n, d, 1, t))
        return ops.sum(ops.mul(features, weights), axis=1)


def nnfb_forward(
    two_channel: Spectrogram,
    model: NeuralFixedBeamformer,
    selector: Optional[Selector] = None,
) -> FbankFeatures:
    """
    Inference-only NNFB features for one echo-cancelled 2-channel spectrogram.

    Raises:
        GeometryError: the spectrogram is not 2-channel
    """
    if two_channel.num_channels != model.num_channels:
        raise GeometryError(
            f"nnfb expects {model.num_channels} channels, got {two_channel.num_channels}"
        )
    with no_grad():
        features = model(ComplexTensor.from_numpy(two_channel.data[None]), selector)
    return FbankFeatures(features.data[0].T)

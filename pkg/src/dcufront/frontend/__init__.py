"""Classic front-end: echo cancellation, fixed beamformers and the neural fixed beamformer."""
from dcufront.frontend.aec import aec_wiener
from dcufront.frontend.beamformer import (
    BeamformerWeights,
    beam_pattern,
    delay_and_sum,
    look_directions,
    superdirective_weights,
)
from dcufront.frontend.nnfb import NeuralFixedBeamformer, nnfb_forward

__all__ = [
    "BeamformerWeights",
    "NeuralFixedBeamformer",
    "aec_wiener",
    "beam_pattern",
    "delay_and_sum",
    "look_directions",
    "nnfb_forward",
    "superdirective_weights",
]

"""Enhancement targets and per-scene model inputs."""
from dataclasses import dataclass

import numpy as np

from dcufront.core.types import AecConfig, ArrayGeometry, Bucket, Scene, Spectrogram, StftConfig
from dcufront.dsp.fbank import log_fbank, power_spectrum
from dcufront.dsp.stft import stft_channels
from dcufront.frontend.aec import aec_wiener
from dcufront.frontend.beamformer import BROADSIDE, delay_and_sum


@dataclass
class PreparedScene:
    """
    Everything a system consumes for one scene.

    Complex arrays are (channels, bins, frames); `baseline_fbank` is
    (num_mels, frames).
    """
    index: int
    bucket: Bucket
    mixture: np.ndarray
    echo_cancelled: np.ndarray
    supervision: np.ndarray
    baseline_fbank: np.ndarray
    frame_labels: np.ndarray

    @property
    def num_frames(self) -> int:
        return self.mixture.shape[-1]

    @property
    def mic1_magnitude(self) -> np.ndarray:
        return np.abs(self.mixture[0])


def _echo_cancel(spec: Spectrogram, aec_cfg: AecConfig) -> Spectrogram:
    reference = spec.channel(2)
    cancelled = [aec_wiener(spec.channel(c), reference, aec_cfg).data[0] for c in (0, 1)]
    return spec.with_data(np.stack(cancelled))


def _beamform(spec: Spectrogram, aec_cfg: AecConfig, geometry: ArrayGeometry) -> Spectrogram:
    return delay_and_sum(_echo_cancel(spec, aec_cfg), BROADSIDE, geometry)


def make_supervision(
    scene: Scene,
    stft_cfg: StftConfig = StftConfig(),
    aec_cfg: AecConfig = AecConfig(),
    geometry: ArrayGeometry = ArrayGeometry(),
) -> np.ndarray:
    """
    Target magnitude M_sup: echo-cancel both mics, delay-and-sum at broadside, take |.|.

    The result is also stored on `scene.supervision_magnitude`.

    Returns:
        (bins, frames) non-negative array
    """
    spec = stft_channels([scene.mic1, scene.mic2, scene.reference], stft_cfg)
    magnitude = np.abs(_beamform(spec, aec_cfg, geometry).data[0])
    scene.supervision_magnitude = magnitude
    return magnitude


def prepare_scene(
    scene: Scene,
    stft_cfg: StftConfig = StftConfig(),
    aec_cfg: AecConfig = AecConfig(),
    geometry: ArrayGeometry = ArrayGeometry(),
) -> PreparedScene:
    """STFTs, echo-cancelled channels, supervision and baseline features of one scene."""
    spec = stft_channels([scene.mic1, scene.mic2, scene.reference], stft_cfg)
    cancelled = _echo_cancel(spec, aec_cfg)
    beam = delay_and_sum(cancelled, BROADSIDE, geometry)
    supervision = np.abs(beam.data[0])
    scene.supervision_magnitude = supervision
    return PreparedScene(
        index=scene.index,
        bucket=scene.bucket,
        mixture=spec.data,
        echo_cancelled=cancelled.data,
        supervision=supervision,
        baseline_fbank=log_fbank(power_spectrum(beam.data[0])).data.T,
        frame_labels=np.asarray(scene.frame_labels, dtype=np.int64),
    )

"""Fixed beamformers for the two-mic linear array: delay-and-sum and superdirective."""
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from dcufront.core.errors import ConfigError, GeometryError
from dcufront.core.types import SAMPLE_RATE, ArrayGeometry, Spectrogram

NUM_LOOK_DIRECTIONS = 8
BROADSIDE = 90.0


@dataclass
class BeamformerWeights:
    """
    Complex filter coefficients, shape (directions, channels, bins).

    The beamformer output for direction d is sum_c conj(w[d, c, f]) * X[c, f, t].
    """
    weights: np.ndarray
    directions: np.ndarray
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)

    def __post_init__(self):
        if self.weights.ndim != 3:
            raise GeometryError(f"weights must be (directions, channels, bins), got {self.weights.shape}")
        if self.weights.shape[0] != len(self.directions):
            raise GeometryError(
                f"{self.weights.shape[0]} weight sets for {len(self.directions)} directions"
            )
        if not np.all(np.isfinite(self.weights)):
            raise GeometryError("beamformer weights contain non-finite values")

    @property
    def num_directions(self) -> int:
        return self.weights.shape[0]

    @property
    def num_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def num_bins(self) -> int:
        return self.weights.shape[2]

    def apply(self, multi: np.ndarray, direction: int = 0) -> np.ndarray:
        """Beamform a (channels, bins, frames) array towards one direction."""
        return np.einsum("cf,cft->ft", self.weights[direction].conj(), multi)


def look_directions(count: int = NUM_LOOK_DIRECTIONS) -> np.ndarray:
    """Azimuths spread uniformly over [0, 180) degrees."""
    return np.arange(count) * 180.0 / count


def bin_frequencies(num_bins: int, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    return np.arange(num_bins) * sample_rate / (2.0 * (num_bins - 1))


def steering_vector(geometry: ArrayGeometry, azimuth_deg: float, num_bins: int) -> np.ndarray:
    """
    Far-field steering vector, shape (channels, bins).

    Mic 1 is the phase reference; a plane wave from `azimuth_deg` reaches the
    mic at position p after p*cos(azimuth)/c seconds.
    """
    delays = geometry.mic_positions * np.cos(np.radians(azimuth_deg)) / geometry.sound_speed
    omega = 2.0 * np.pi * bin_frequencies(num_bins)
    return np.exp(-1j * np.outer(delays, omega))


def delay_and_sum_weights(
    geometry: ArrayGeometry, num_bins: int, directions: Optional[Sequence[float]] = None
) -> BeamformerWeights:
    directions = look_directions() if directions is None else np.asarray(directions, dtype=np.float64)
    weights = np.stack([steering_vector(geometry, az, num_bins) for az in directions])
    return BeamformerWeights(weights / geometry.num_mics, directions, geometry)


def delay_and_sum(
    multi: Spectrogram,
    look_direction: float = BROADSIDE,
    geometry: ArrayGeometry = ArrayGeometry(),
) -> Spectrogram:
    """
    Phase-align both channels towards `look_direction` and average them.

    Raises:
        GeometryError: the spectrogram does not have exactly two channels
    """
    if multi.num_channels != 2 or geometry.num_mics != 2:
        raise GeometryError(f"delay-and-sum needs 2 channels, got {multi.num_channels}")
    weights = delay_and_sum_weights(geometry, multi.num_bins, [look_direction])
    return multi.with_data(weights.apply(multi.data)[None])


def diffuse_coherence(geometry: ArrayGeometry, num_bins: int) -> np.ndarray:
    """Spherically isotropic noise coherence sinc(2 pi f d_ij / c), shape (bins, channels, channels)."""
    positions = geometry.mic_positions
    distances = np.abs(positions[:, None] - positions[None, :])
    freqs = bin_frequencies(num_bins)
    # np.sinc(x) is sin(pi x) / (pi x)
    return np.sinc(2.0 * freqs[:, None, None] * distances[None] / geometry.sound_speed)


def superdirective_weights(
    geometry: ArrayGeometry,
    num_bins: int,
    diagonal_loading: float = 1e-2,
    directions: Optional[Sequence[float]] = None,
) -> BeamformerWeights:
    """
    MVDR weights against diffuse noise: w = (G + eI)^-1 v / (v^H (G + eI)^-1 v).

    The loading e is `diagonal_loading` times trace(G) / channels.

    Raises:
        ConfigError: diagonal_loading is not positive
        GeometryError: the loaded coherence matrix is numerically singular
    """
    if not diagonal_loading > 0:
        raise ConfigError("beamformer.diagonal_loading", f"must be > 0, got {diagonal_loading}")
    directions = look_directions() if directions is None else np.asarray(directions, dtype=np.float64)
    coherence = diffuse_coherence(geometry, num_bins)
    channels = geometry.num_mics
    loading = diagonal_loading * np.trace(coherence, axis1=1, axis2=2) / channels
    loaded = coherence + loading[:, None, None] * np.eye(channels)
    if np.max(np.linalg.cond(loaded)) > 1e12:
        raise GeometryError("loaded diffuse coherence matrix is singular")

    all_weights = []
    for azimuth in directions:
        steer = steering_vector(geometry, azimuth, num_bins).T
        numerator = np.linalg.solve(loaded, steer[:, :, None])[:, :, 0]
        denominator = np.einsum("fc,fc->f", steer.conj(), numerator)
        all_weights.append((numerator / denominator[:, None]).T)
    return BeamformerWeights(np.stack(all_weights), directions, geometry)


def distortionless_error(weights: BeamformerWeights) -> float:
    """max |w^H v - 1| over directions and bins."""
    worst = 0.0
    for d, azimuth in enumerate(weights.directions):
        steer = steering_vector(weights.geometry, azimuth, weights.num_bins)
        response = np.sum(weights.weights[d].conj() * steer, axis=0)
        worst = max(worst, float(np.max(np.abs(response - 1.0))))
    return worst


def beam_pattern(weights: BeamformerWeights, azimuths: Sequence[float], direction: int = 0) -> np.ndarray:
    """
    Magnitude response of one weight set towards each azimuth.

    Returns:
        (len(azimuths), bins) array of |w^H v(azimuth)|
    """
    pattern = []
    for azimuth in azimuths:
        steer = steering_vector(weights.geometry, azimuth, weights.num_bins)
        pattern.append(np.abs(np.sum(weights.weights[direction].conj() * steer, axis=0)))
    return np.stack(pattern)

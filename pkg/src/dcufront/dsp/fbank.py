"""Mel filterbank and log-FBank features."""
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from dcufront.autodiff import ops
from dcufront.autodiff.tensor import Tensor
from dcufront.core.errors import GeometryError, SignalError
from dcufront.core.types import SAMPLE_RATE, FbankFeatures, Spectrogram

NUM_MELS = 80
LOG_FLOOR = 1e-10


def hz_to_mel(hz: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def mel_to_hz(mel: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(
    num_mels: int = NUM_MELS,
    fft_size: int = 512,
    sample_rate: int = SAMPLE_RATE,
    low_hz: float = 0.0,
    high_hz: Optional[float] = None,
) -> np.ndarray:
    """
    Triangular filters equally spaced on the mel scale.

    Returns:
        Read-only matrix of shape (num_mels, fft_size // 2 + 1)
    """
    high_hz = sample_rate / 2.0 if high_hz is None else high_hz
    if not 0.0 <= low_hz < high_hz <= sample_rate / 2.0:
        raise GeometryError(f"mel band [{low_hz}, {high_hz}] Hz outside [0, {sample_rate / 2}]")
    edges = mel_to_hz(np.linspace(hz_to_mel(low_hz), hz_to_mel(high_hz), num_mels + 2))
    freqs = np.arange(fft_size // 2 + 1) * sample_rate / fft_size
    left, center, right = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - left) / (center - left)
    falling = (right - freqs[None, :]) / (right - center)
    filters = np.maximum(0.0, np.minimum(rising, falling))
    filters.setflags(write=False)
    return filters


def power_spectrum(spec: Union[Spectrogram, np.ndarray]) -> np.ndarray:
    data = spec.data if isinstance(spec, Spectrogram) else spec
    return data.real ** 2 + data.imag ** 2


def log_fbank(power: np.ndarray, filters: Optional[np.ndarray] = None) -> FbankFeatures:
    """
    Log mel energies of a power spectrogram.

    Args:
        power: Non-negative power, shape (bins, frames)
        filters: Filterbank matrix (defaults to 80 mels over 0-8 kHz at 512 points)

    Returns:
        FbankFeatures of shape (frames, num_mels)

    Raises:
        SignalError: negative power values
        GeometryError: bins do not match the filterbank
    """
    power = np.asarray(power, dtype=np.float64)
    if np.any(power < 0):
        raise SignalError(f"power spectrogram has negative values (min {power.min():.3g})")
    if filters is None:
        filters = mel_filterbank(fft_size=2 * (power.shape[0] - 1))
    if power.shape[0] != filters.shape[1]:
        raise GeometryError(f"power has {power.shape[0]} bins, filterbank expects {filters.shape[1]}")
    energies = filters @ power
    return FbankFeatures(np.log(np.maximum(energies, LOG_FLOOR)).T)


def log_fbank_tensor(power: Tensor, filters: Optional[np.ndarray] = None, bin_axis: int = 1) -> Tensor:
    """
    Differentiable log-FBank: mel projection along `bin_axis`, floor, log.

    With `power` shaped (N, bins, frames) the result is (N, num_mels, frames).
    """
    if filters is None:
        filters = mel_filterbank(fft_size=2 * (power.shape[bin_axis] - 1))
    energies = ops.linear_along(power, Tensor(filters), axis=bin_axis)
    return ops.log(ops.clamp_min(energies, LOG_FLOOR))

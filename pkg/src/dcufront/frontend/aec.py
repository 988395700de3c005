"""Frequency-domain Wiener echo cancellation."""
from typing import TypeVar, Union

import numpy as np

from dcufront.core.errors import GeometryError
from dcufront.core.types import AecConfig, Spectrogram

Channel = TypeVar("Channel", Spectrogram, np.ndarray)


def _channel_data(value: Union[Spectrogram, np.ndarray], role: str) -> np.ndarray:
    if isinstance(value, Spectrogram):
        if value.num_channels != 1:
            raise GeometryError(f"{role} must be a single channel, got {value.num_channels}")
        return value.data[0]
    data = np.asarray(value)
    if data.ndim != 2:
        raise GeometryError(f"{role} must be (bins, frames), got {data.shape}")
    return data


def aec_wiener(mic: Channel, reference: Channel, cfg: AecConfig = AecConfig()) -> Channel:
    """
    Subtract the echo predicted from the loudspeaker reference.

    Per bin, the auto-spectrum of the last `filter_length_frames` reference
    frames and their cross-spectrum with the microphone are smoothed
    recursively; the Wiener filter h = (R + reg*I)^-1 p gives the echo
    estimate h^H x, which is subtracted from the microphone frame. With one
    tap this is H = S_dx / (S_xx + reg).

    Args:
        mic: Microphone channel, Spectrogram or complex (bins, frames)
        reference: Reference channel with the same geometry
        cfg: Filter length, regularisation and smoothing

    Returns:
        Echo-cancelled channel of the same type as `mic`

    Raises:
        GeometryError: mic and reference geometries differ
    """
    cfg.validate()
    if isinstance(mic, Spectrogram) and isinstance(reference, Spectrogram):
        if not mic.same_geometry(reference):
            raise GeometryError("mic and reference spectrograms differ in geometry")
    d = _channel_data(mic, "mic")
    x = _channel_data(reference, "reference")
    if d.shape != x.shape:
        raise GeometryError(f"mic {d.shape} and reference {x.shape} differ in geometry")

    bins, frames = d.shape
    taps = cfg.filter_length_frames
    alpha = cfg.smoothing
    loading = cfg.regularization * np.eye(taps)

    history = np.zeros((bins, taps), dtype=np.complex128)
    auto = np.zeros((bins, taps, taps), dtype=np.complex128)
    cross = np.zeros((bins, taps), dtype=np.complex128)
    out = np.empty_like(d, dtype=np.complex128)
    for t in range(frames):
        history = np.roll(history, 1, axis=1)
        history[:, 0] = x[:, t]
        auto = alpha * auto + (1.0 - alpha) * history[:, :, None] * history[:, None, :].conj()
        cross = alpha * cross + (1.0 - alpha) * history * d[:, t, None].conj()
        weights = np.linalg.solve(auto + loading, cross[:, :, None])[:, :, 0]
        out[:, t] = d[:, t] - np.sum(weights.conj() * history, axis=1)

    if isinstance(mic, Spectrogram):
        return mic.with_data(out[None])
    return out


def echo_reduction(before: np.ndarray, after: np.ndarray, skip_frames: int = 0) -> float:
    """Output/input energy ratio, ignoring the first `skip_frames` convergence frames."""
    energy_in = float(np.sum(np.abs(before[..., skip_frames:]) ** 2))
    energy_out = float(np.sum(np.abs(after[..., skip_frames:]) ** 2))
    if energy_in == 0.0:
        return 0.0
    return energy_out / energy_in

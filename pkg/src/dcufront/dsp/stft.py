"""Short-time Fourier analysis and overlap-add synthesis."""
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.signal import get_window

from dcufront.core.errors import GeometryError
from dcufront.core.types import ChannelId, Spectrogram, StftConfig, Waveform

DEFAULT_STFT = StftConfig()

# Synthesis leaves samples whose summed squared window is below this at zero.
_SYNTHESIS_FLOOR = 1e-10


@lru_cache(maxsize=8)
def analysis_window(length: int) -> np.ndarray:
    """Periodic Hann window (the DFT-even variant)."""
    window = get_window("hann", length, fftbins=True)
    window.setflags(write=False)
    return window


def stft(signal: Union[Waveform, np.ndarray], cfg: StftConfig = DEFAULT_STFT) -> Spectrogram:
    """
    Windowed DFT frames of one or more channels.

    The first frame starts at sample 0 and a trailing partial frame is
    dropped, so there are 1 + (n - window) // hop frames.

    Args:
        signal: Waveform, or samples shaped (n,) or (channels, n)
        cfg: Analysis geometry

    Returns:
        Spectrogram of shape (channels, fft_size // 2 + 1, frames)

    Raises:
        GeometryError: the signal is shorter than one window
    """
    samples = signal.samples if isinstance(signal, Waveform) else np.asarray(signal, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[None, :]
    win, hop = cfg.window_length, cfg.hop_length
    if samples.shape[-1] < win:
        raise GeometryError(
            f"signal of {samples.shape[-1]} samples is shorter than one window ({win} samples)"
        )
    frames = np.lib.stride_tricks.sliding_window_view(samples, win, axis=-1)[:, ::hop, :]
    spectrum = np.fft.rfft(frames * analysis_window(win), n=cfg.fft_size, axis=-1)
    return Spectrogram(
        np.ascontiguousarray(spectrum.transpose(0, 2, 1)),
        fft_size=cfg.fft_size,
        window_length=win,
        hop_length=hop,
        sample_rate=cfg.sample_rate,
    )


def stft_channels(channels: Sequence[Waveform], cfg: StftConfig = DEFAULT_STFT) -> Spectrogram:
    """STFT of several mono waveforms stacked along the channel axis."""
    lengths = {w.num_samples for w in channels}
    if len(lengths) != 1:
        raise GeometryError(f"channels differ in length: {sorted(lengths)}")
    return stft(np.stack([w.samples for w in channels]), cfg)


def istft(spec: Spectrogram) -> Waveform:
    """
    Weighted overlap-add synthesis normalised by the summed squared window.

    A periodic Hann window at 25 ms / 10 ms is not constant-overlap-add on
    its own; normalising by sum(w^2) makes istft(stft(x)) == x wherever
    the window sum is non-zero.

    Raises:
        GeometryError: the frame geometry is inconsistent
    """
    win, hop = spec.window_length, spec.hop_length
    if win > spec.fft_size or win <= 0 or hop <= 0:
        raise GeometryError(
            f"window {win}, hop {hop} inconsistent with fft_size {spec.fft_size}"
        )
    if spec.num_frames == 0:
        raise GeometryError("spectrogram has no frames")

    window = analysis_window(win)
    frames = np.fft.irfft(spec.data.transpose(0, 2, 1), n=spec.fft_size, axis=-1)[..., :win]
    frames = frames * window
    length = (spec.num_frames - 1) * hop + win
    out = np.zeros((spec.num_channels, length))
    norm = np.zeros(length)
    for t in range(spec.num_frames):
        out[:, t * hop:t * hop + win] += frames[:, t, :]
        norm[t * hop:t * hop + win] += window ** 2
    valid = norm > _SYNTHESIS_FLOOR
    out = np.where(valid, out / np.where(valid, norm, 1.0), 0.0)

    if spec.num_channels == 1:
        return Waveform(out[0], spec.sample_rate, ChannelId.MONO)
    return Waveform(out, spec.sample_rate, ChannelId.MONO)

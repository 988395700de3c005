"""Seed-indexed synthesis of two-mic smart-speaker scenes."""
import math
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy.signal import butter, fftconvolve, sosfilt

from dcufront.core.log import get_logger
from dcufront.core.types import (
    SAMPLE_RATE,
    ArrayGeometry,
    Bucket,
    ChannelId,
    Scene,
    SceneComponents,
    SceneConfig,
    StftConfig,
    Waveform,
)

logger = get_logger(__name__)

SNR_RANGES = {
    Bucket.SNR_LOW: (-5.0, 5.0),
    Bucket.SNR_MID: (5.0, 15.0),
    Bucket.SNR_HIGH: (15.0, 25.0),
    Bucket.ECHOED: (0.0, 20.0),
}
PEAK_LIMIT = 0.95
MAX_ECHO_TAPS = 32
CLASS_BAND_HZ = (250.0, 6000.0)

# Independent random streams per scene, so toggling one part leaves the others intact.
_META, _SOURCE, _ECHO, _NOISE = range(4)


def _rng(cfg: SceneConfig, index: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, index, stream])


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x ** 2)))


def class_centres(num_classes: int) -> np.ndarray:
    """Centre frequencies of the class patterns, log-spaced over 250 Hz - 6 kHz."""
    return np.geomspace(CLASS_BAND_HZ[0], CLASS_BAND_HZ[1], num_classes)


@lru_cache(maxsize=64)
def _class_filter(num_classes: int, label: int) -> np.ndarray:
    centre = class_centres(num_classes)[label]
    band = (centre / 2 ** 0.25, centre * 2 ** 0.25)
    return butter(4, band, btype="bandpass", fs=SAMPLE_RATE, output="sos")


def class_pattern(num_classes: int, label: int, length: int, rng: np.random.Generator, rms: float) -> np.ndarray:
    """Half-octave band-limited noise burst for one class, scaled to `rms`."""
    burst = sosfilt(_class_filter(num_classes, label), rng.standard_normal(length))
    level = _rms(burst)
    return burst * (rms / level) if level > 0 else burst


def fractional_delay(x: np.ndarray, delay_samples: float) -> np.ndarray:
    """Delay by a possibly fractional number of samples with a linear phase shift."""
    if abs(delay_samples) < 1e-9:
        return x.copy()
    size = 1 << int(math.ceil(math.log2(len(x) + int(math.ceil(abs(delay_samples))) + 64)))
    spectrum = np.fft.rfft(x, n=size)
    freqs = np.fft.rfftfreq(size)
    return np.fft.irfft(spectrum * np.exp(-2j * np.pi * freqs * delay_samples), n=size)[:len(x)]


def _music_reference(length: int, rng: np.random.Generator) -> np.ndarray:
    """Loudspeaker playback: a few harmonic tones with slow amplitude modulation."""
    t = np.arange(length) / SAMPLE_RATE
    signal = np.zeros(length)
    for _ in range(3):
        f0 = rng.uniform(110.0, 440.0)
        envelope = 0.6 + 0.4 * np.sin(2 * np.pi * rng.uniform(0.5, 3.0) * t + rng.uniform(0, 2 * np.pi))
        for harmonic in range(1, 5):
            phase = rng.uniform(0, 2 * np.pi)
            signal += envelope * np.sin(2 * np.pi * f0 * harmonic * t + phase) / harmonic
    signal += 0.05 * rng.standard_normal(length)
    return signal / (np.max(np.abs(signal)) + 1e-12) * 0.5


def _echo_path(rng: np.random.Generator) -> np.ndarray:
    taps = int(rng.integers(8, MAX_ECHO_TAPS + 1))
    return rng.standard_normal(taps) * np.exp(-np.arange(taps) / (taps / 4.0))


def _draw_bucket(cfg: SceneConfig, rng: np.random.Generator) -> Bucket:
    buckets = list(cfg.bucket_probabilities)
    probabilities = np.array([cfg.bucket_probabilities[b] for b in buckets])
    return buckets[int(rng.choice(len(buckets), p=probabilities / probabilities.sum()))]


def _segments(cfg: SceneConfig, length: int, rng: np.random.Generator) -> Tuple[np.ndarray, List[Tuple[int, int, int]]]:
    low, high = (int(round(ms * SAMPLE_RATE / 1000.0)) for ms in cfg.segment_ms)
    source = np.zeros(length)
    segments = []
    start = 0
    while start < length:
        end = min(start + int(rng.integers(low, high + 1)), length)
        label = int(rng.integers(cfg.num_classes))
        source[start:end] = class_pattern(cfg.num_classes, label, end - start, rng, cfg.source_rms)
        segments.append((start, end, label))
        start = end
    return source, segments


def frame_labels(segments: List[Tuple[int, int, int]], num_frames: int, stft_cfg: StftConfig) -> np.ndarray:
    """Class active at the centre sample of every STFT frame."""
    centres = np.arange(num_frames) * stft_cfg.hop_length + stft_cfg.window_length // 2
    labels = np.zeros(num_frames, dtype=np.int64)
    for start, end, label in segments:
        labels[(centres >= start) & (centres < end)] = label
    return labels


def synthesize_components(
    cfg: SceneConfig,
    index: int,
    geometry: ArrayGeometry = ArrayGeometry(),
    stft_cfg: StftConfig = StftConfig(),
    azimuth: Optional[float] = None,
    has_echo: Optional[bool] = None,
    snr_db: Optional[float] = None,
) -> Tuple[Scene, SceneComponents]:
    """
    Build scene `index` and its unmixed parts.

    The scene is a pure function of (cfg, index). Keyword overrides replace
    the drawn azimuth, echo flag or SNR without disturbing the other random
    streams; `snr_db=math.inf` removes the noise.

    Raises:
        ConfigError: the configuration is invalid
    """
    cfg.validate()
    n = cfg.num_samples
    meta = _rng(cfg, index, _META)
    bucket = _draw_bucket(cfg, meta)
    drawn_snr = float(meta.uniform(*SNR_RANGES[bucket]))
    drawn_azimuth = float(meta.uniform(0.0, 180.0))
    has_echo = (bucket is Bucket.ECHOED) if has_echo is None else bool(has_echo)
    snr_db = drawn_snr if snr_db is None else float(snr_db)
    azimuth = drawn_azimuth if azimuth is None else float(azimuth)

    source, segments = _segments(cfg, n, _rng(cfg, index, _SOURCE))
    delay = geometry.steering_delay(azimuth) * SAMPLE_RATE
    delayed = fractional_delay(source, delay)

    echo_rng = _rng(cfg, index, _ECHO)
    reference = _music_reference(n, echo_rng)
    echo1 = fftconvolve(reference, _echo_path(echo_rng))[:n]
    echo2 = fftconvolve(reference, _echo_path(echo_rng))[:n]
    echo_scale = _rms(source) / max(_rms(echo1), 1e-12) * 10.0 ** (cfg.echo_to_signal_db / 20.0)
    echo1, echo2 = echo1 * echo_scale, echo2 * echo_scale

    noise_rng = _rng(cfg, index, _NOISE)
    noise1, noise2 = noise_rng.standard_normal(n), noise_rng.standard_normal(n)
    if math.isinf(snr_db) and snr_db > 0:
        noise_scale = 0.0
    else:
        noise_scale = _rms(source) / (_rms(noise1) * 10.0 ** (snr_db / 20.0))
    noise1, noise2 = noise1 * noise_scale, noise2 * noise_scale

    # One gain for the echoed and echo-free variants keeps them comparable.
    peak = max(
        np.max(np.abs(source + noise1 + echo1)),
        np.max(np.abs(delayed + noise2 + echo2)),
        np.max(np.abs(source + noise1)),
        np.max(np.abs(delayed + noise2)),
        np.max(np.abs(reference)),
    )
    gain = min(1.0, PEAK_LIMIT / peak) if peak > 0 else 1.0
    if not has_echo:
        reference = np.zeros(n)
        echo1, echo2 = np.zeros(n), np.zeros(n)

    components = SceneComponents(
        source=source * gain,
        delayed_source=delayed * gain,
        reference=reference * gain,
        echo1=echo1 * gain,
        echo2=echo2 * gain,
        noise1=noise1 * gain,
        noise2=noise2 * gain,
        segment_labels=segments,
        gain=gain,
    )
    mic1 = components.source + components.echo1 + components.noise1
    mic2 = components.delayed_source + components.echo2 + components.noise2
    scene = Scene(
        index=index,
        mic1=Waveform(mic1, SAMPLE_RATE, ChannelId.MIC1),
        mic2=Waveform(mic2, SAMPLE_RATE, ChannelId.MIC2),
        reference=Waveform(components.reference, SAMPLE_RATE, ChannelId.REFERENCE),
        clean=Waveform(components.source, SAMPLE_RATE, ChannelId.MIC1),
        azimuth=azimuth,
        snr_db=snr_db,
        has_echo=has_echo,
        frame_labels=frame_labels(segments, stft_cfg.num_frames(n), stft_cfg),
    )
    logger.debug(
        "scene %d: azimuth %.1f, snr %.1f dB, echo %s, %d segments",
        index, azimuth, snr_db, has_echo, len(segments),
    )
    return scene, components


def synthesize_scene(cfg: SceneConfig, index: int, **overrides) -> Scene:
    """Scene `index` of the corpus described by `cfg`."""
    scene, _ = synthesize_components(cfg, index, **overrides)
    return scene

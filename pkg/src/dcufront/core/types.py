"""Core data types and structures."""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from dcufront.core.errors import ConfigError, GeometryError

SAMPLE_RATE = 16000


class ChannelId(Enum):
    """Capture channels of the two-mic smart speaker."""
    MIC1 = "mic1"
    MIC2 = "mic2"
    REFERENCE = "ref"
    MONO = "mono"


class SystemKind(Enum):
    """Trainable systems (plus the stand-alone DCUnet used for pretraining)."""
    DCUNET = "dcunet"
    BASELINE = "baseline"
    NNFB = "nnfb"
    CASCADE = "cascade"
    MTL = "mtl"

    @property
    def has_enhancement_head(self) -> bool:
        return self in (SystemKind.DCUNET, SystemKind.CASCADE, SystemKind.MTL)

    @property
    def has_recognition_head(self) -> bool:
        return self is not SystemKind.DCUNET


class Bucket(Enum):
    """Evaluation subsets: echoed utterances, then non-echo by SNR."""
    ECHOED = "Echoed"
    SNR_LOW = "<5 dB"
    SNR_MID = "[5,15) dB"
    SNR_HIGH = ">=15 dB"

    @classmethod
    def classify(cls, has_echo: bool, snr_db: float) -> "Bucket":
        if has_echo:
            return cls.ECHOED
        if snr_db < 5.0:
            return cls.SNR_LOW
        if snr_db < 15.0:
            return cls.SNR_MID
        return cls.SNR_HIGH


@dataclass
class Waveform:
    """
    Time-domain signal, float samples in [-1, 1].

    Mono signals hold `samples` of shape (n,); multi-channel signals read
    from a single WAV file hold (channels, n).
    """
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE
    channel_id: ChannelId = ChannelId.MONO

    @property
    def num_channels(self) -> int:
        return 1 if self.samples.ndim == 1 else self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[-1]

    @property
    def duration_s(self) -> float:
        return self.num_samples / self.sample_rate

    def channel(self, index: int, channel_id: ChannelId = ChannelId.MONO) -> "Waveform":
        """Extract one channel as a mono waveform."""
        if self.samples.ndim == 1:
            if index != 0:
                raise IndexError(f"mono waveform has no channel {index}")
            return self
        return Waveform(self.samples[index].copy(), self.sample_rate, channel_id)


@dataclass(frozen=True)
class StftConfig:
    """Analysis geometry: 25 ms periodic Hann window, 10 ms shift, 512-point FFT."""
    window_ms: float = 25.0
    shift_ms: float = 10.0
    fft_size: int = 512
    sample_rate: int = SAMPLE_RATE

    @property
    def window_length(self) -> int:
        return int(round(self.window_ms * self.sample_rate / 1000.0))

    @property
    def hop_length(self) -> int:
        return int(round(self.shift_ms * self.sample_rate / 1000.0))

    @property
    def num_bins(self) -> int:
        return self.fft_size // 2 + 1

    def num_frames(self, num_samples: int) -> int:
        """Frames for a signal: first frame at sample 0, trailing partial frame dropped."""
        if num_samples < self.window_length:
            return 0
        return 1 + (num_samples - self.window_length) // self.hop_length

    def validate(self):
        if self.fft_size <= 0 or self.fft_size % 2:
            raise ConfigError("stft.fft_size", f"must be a positive even integer, got {self.fft_size}")
        if self.window_length > self.fft_size:
            raise ConfigError(
                "stft.window_ms",
                f"window of {self.window_length} samples exceeds fft_size {self.fft_size}",
            )
        if self.hop_length <= 0:
            raise ConfigError("stft.shift_ms", "must be positive")


@dataclass
class Spectrogram:
    """Complex STFT, shape (channels, bins, frames)."""
    data: np.ndarray
    fft_size: int = 512
    window_length: int = 400
    hop_length: int = 160
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        if self.data.ndim != 3:
            raise GeometryError(f"spectrogram must be (channels, bins, frames), got {self.data.shape}")
        if self.data.shape[1] != self.fft_size // 2 + 1:
            raise GeometryError(
                f"spectrogram has {self.data.shape[1]} bins, fft_size {self.fft_size} "
                f"implies {self.fft_size // 2 + 1}"
            )

    @property
    def num_channels(self) -> int:
        return self.data.shape[0]

    @property
    def num_bins(self) -> int:
        return self.data.shape[1]

    @property
    def num_frames(self) -> int:
        return self.data.shape[2]

    @property
    def real(self) -> np.ndarray:
        return self.data.real

    @property
    def imag(self) -> np.ndarray:
        return self.data.imag

    def channel(self, index: int) -> "Spectrogram":
        return self.with_data(self.data[index:index + 1])

    def with_data(self, data: np.ndarray) -> "Spectrogram":
        """Same geometry, new values."""
        return Spectrogram(data, self.fft_size, self.window_length, self.hop_length, self.sample_rate)

    def same_geometry(self, other: "Spectrogram") -> bool:
        return (
            self.data.shape[1:] == other.data.shape[1:]
            and self.fft_size == other.fft_size
            and self.window_length == other.window_length
            and self.hop_length == other.hop_length
            and self.sample_rate == other.sample_rate
        )


@dataclass
class FbankFeatures:
    """Log mel-filterbank energies, shape (frames, num_mels)."""
    data: np.ndarray

    @property
    def num_frames(self) -> int:
        return self.data.shape[0]

    @property
    def num_mels(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class AecConfig:
    """Wiener echo canceller settings."""
    filter_length_frames: int = 1
    regularization: float = 1e-6
    smoothing: float = 0.98

    def validate(self):
        if self.filter_length_frames < 1:
            raise ConfigError("aec.filter_length_frames", "must be a positive integer")
        if not self.regularization > 0:
            raise ConfigError("aec.regularization", "must be > 0")
        if not 0.0 < self.smoothing < 1.0:
            raise ConfigError("aec.smoothing", "must lie in (0, 1)")


@dataclass(frozen=True)
class ArrayGeometry:
    """Linear two-mic array of the device (about 7 cm spacing)."""
    mic_spacing_m: float = 0.07
    sound_speed: float = 343.0
    num_mics: int = 2

    def steering_delay(self, azimuth_deg: float) -> float:
        """Delay of mic 2 relative to mic 1 in seconds for a plane wave from `azimuth_deg`."""
        return self.mic_spacing_m * math.cos(math.radians(azimuth_deg)) / self.sound_speed

    @property
    def mic_positions(self) -> np.ndarray:
        return np.arange(self.num_mics) * self.mic_spacing_m


@dataclass
class SceneConfig:
    """Desk-scale synthetic corpus settings."""
    num_scenes: int = 200
    duration_s: float = 1.0
    echo_fraction: float = 0.235
    snr_bucket_fractions: Tuple[float, float, float] = (0.14, 0.32, 0.305)
    num_classes: int = 8
    seed: int = 0
    echo_to_signal_db: float = 0.0
    segment_ms: Tuple[float, float] = (100.0, 400.0)
    source_rms: float = 0.1
    test_fraction: float = 0.1

    def validate(self):
        fractions = (self.echo_fraction,) + tuple(self.snr_bucket_fractions)
        if any(f < 0 for f in fractions):
            raise ConfigError("scenes.snr_bucket_fractions", "fractions must be non-negative")
        total = sum(fractions)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(
                "scenes.snr_bucket_fractions",
                f"echo_fraction + snr_bucket_fractions must sum to 1, got {total:.6f}",
            )
        if self.num_scenes <= 0:
            raise ConfigError("scenes.num_scenes", "must be positive")
        if self.num_classes < 2:
            raise ConfigError("scenes.num_classes", "need at least two classes")
        if self.duration_s <= 0:
            raise ConfigError("scenes.duration_s", "must be positive")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("scenes.test_fraction", "must lie in (0, 1)")
        low, high = self.segment_ms
        if not 0 < low <= high:
            raise ConfigError("scenes.segment_ms", f"invalid range {self.segment_ms}")

    @property
    def bucket_probabilities(self) -> Dict[Bucket, float]:
        low, mid, high = self.snr_bucket_fractions
        return {
            Bucket.ECHOED: self.echo_fraction,
            Bucket.SNR_LOW: low,
            Bucket.SNR_MID: mid,
            Bucket.SNR_HIGH: high,
        }

    @property
    def num_samples(self) -> int:
        return int(round(self.duration_s * SAMPLE_RATE))


@dataclass
class SceneComponents:
    """Unmixed parts of a scene, after the common output gain."""
    source: np.ndarray
    delayed_source: np.ndarray
    reference: np.ndarray
    echo1: np.ndarray
    echo2: np.ndarray
    noise1: np.ndarray
    noise2: np.ndarray
    segment_labels: List[Tuple[int, int, int]]
    gain: float = 1.0


@dataclass
class Scene:
    """
    One synthetic multi-channel utterance.

    `clean` is None for scenes read back from an exported directory.
    """
    index: int
    mic1: Waveform
    mic2: Waveform
    reference: Waveform
    clean: Optional[Waveform]
    azimuth: float
    snr_db: float
    has_echo: bool
    frame_labels: np.ndarray
    supervision_magnitude: Optional[np.ndarray] = None

    @property
    def bucket(self) -> Bucket:
        return Bucket.classify(self.has_echo, self.snr_db)

    @property
    def num_samples(self) -> int:
        return self.mic1.num_samples


@dataclass
class TrainSchedule:
    """
    Loss schedule and optimisation knobs.

    The enhancement loss is mixed in with weight `beta` for epochs
    t <= t_enh; after that only the recognition loss is optimised.
    """
    beta: float = 0.8
    t_enh: int = 3
    epochs: int = 10
    learning_rate: float = 1e-3
    adam_betas: Tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    batch_size: int = 4
    seed: int = 0
    dropout_p: float = 0.2
    init_source: Optional[str] = None

    def validate(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("schedule.beta", f"must lie in [0, 1], got {self.beta}")
        if self.t_enh < 0:
            raise ConfigError("schedule.t_enh", f"must be >= 0, got {self.t_enh}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError("schedule.dropout_p", f"must lie in [0, 1), got {self.dropout_p}")
        if self.batch_size <= 0:
            raise ConfigError("schedule.batch_size", "must be positive")
        if self.epochs < 0:
            raise ConfigError("schedule.epochs", "must be >= 0")
        if self.learning_rate <= 0:
            raise ConfigError("schedule.learning_rate", "must be positive")

    def enhancement_active(self, t: int) -> bool:
        return t <= self.t_enh


@dataclass
class EpochMetrics:
    """One line of the metrics log."""
    epoch: int
    system: str
    l_asr: Optional[float]
    l_enh: Optional[float]
    frame_acc: Optional[float]

    def to_log_line(self) -> str:
        def fmt(value: Optional[float]) -> str:
            return "" if value is None else repr(float(value))

        return f"{self.epoch},{self.system},{fmt(self.l_asr)},{fmt(self.l_enh)},{fmt(self.frame_acc)}"


@dataclass
class BucketResult:
    """Frame-accuracy counts for one evaluation subset."""
    bucket: Optional[Bucket]
    num_scenes: int = 0
    frames: int = 0
    correct: int = 0

    @property
    def accuracy(self) -> Optional[float]:
        if self.frames == 0:
            return None
        return self.correct / self.frames

    def merge(self, other: "BucketResult") -> "BucketResult":
        return BucketResult(
            self.bucket,
            self.num_scenes + other.num_scenes,
            self.frames + other.frames,
            self.correct + other.correct,
        )


@dataclass
class EvaluationReport:
    """Per-bucket and total frame accuracy, plus enhancement error when available."""
    system: SystemKind
    buckets: Dict[Bucket, BucketResult] = field(default_factory=dict)
    enhancement_mse: Optional[float] = None
    unprocessed_mse: Optional[float] = None

    @property
    def total(self) -> BucketResult:
        result = BucketResult(None)
        for bucket in Bucket:
            if bucket in self.buckets:
                result = result.merge(self.buckets[bucket])
        return result

    def accuracy(self, bucket: Optional[Bucket] = None) -> Optional[float]:
        """Accuracy of one bucket (None if absent) or of the whole test set."""
        if bucket is None:
            return self.total.accuracy
        result = self.buckets.get(bucket)
        return result.accuracy if result else None

    @property
    def enhancement_gain(self) -> Optional[float]:
        """Relative MSE reduction of the model over the unprocessed mic-1 magnitude."""
        if self.enhancement_mse is None or not self.unprocessed_mse:
            return None
        return 1.0 - self.enhancement_mse / self.unprocessed_mse

    def summary(self) -> str:
        """Human-readable summary."""
        total = self.total
        lines = [
            f"Evaluation ({self.system.value}):",
            f"  Scenes: {total.num_scenes}",
            f"  Frames: {total.frames}",
            f"  Frame accuracy: {_pct(total.accuracy)}",
        ]
        if self.enhancement_mse is not None:
            lines.append(f"  Enhancement MSE: {self.enhancement_mse:.4f}")
            lines.append(f"  Unprocessed MSE: {self.unprocessed_mse:.4f}")
        return "\n".join(lines)


def _pct(value: Optional[float]) -> str:
    return "-" if value is None else f"{value * 100:.2f}%"

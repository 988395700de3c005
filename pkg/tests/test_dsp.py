"""Tests for STFT/ISTFT, log-FBank features and WAV I/O."""
import numpy as np
import pytest
import soundfile as sf

from dcufront.autodiff.tensor import Tensor
from dcufront.core.errors import GeometryError, SignalError, WavFormatError
from dcufront.core.types import SAMPLE_RATE, ChannelId, Spectrogram, StftConfig, Waveform
from dcufront.dsp.fbank import LOG_FLOOR, NUM_MELS, log_fbank, log_fbank_tensor, mel_filterbank
from dcufront.dsp.stft import analysis_window, istft, stft, stft_channels
from dcufront.dsp.wavio import read_wav, write_wav


class TestStftGeometry:
    """Frame geometry at 16 kHz."""

    def test_window_and_shift_in_samples(self):
        cfg = StftConfig()
        assert cfg.window_length == 400
        assert cfg.hop_length == 160
        assert cfg.num_bins == 257

    def test_one_second_has_98_frames(self):
        spec = stft(np.zeros(SAMPLE_RATE))
        assert spec.data.shape == (1, 257, 98)
        assert StftConfig().num_frames(SAMPLE_RATE) == 98

    def test_shorter_than_window(self):
        with pytest.raises(GeometryError):
            stft(np.zeros(399))
        assert StftConfig().num_frames(399) == 0

    def test_invalid_fft_size(self):
        with pytest.raises(Exception, match="stft.fft_size"):
            StftConfig(fft_size=511).validate()

    def test_spectrogram_bin_count_checked(self):
        with pytest.raises(GeometryError):
            Spectrogram(np.zeros((1, 100, 4), dtype=complex))


class TestStft:
    """Analysis."""

    def test_zero_signal(self):
        assert np.all(stft(np.zeros(2000)).data == 0)

    def test_matches_direct_dft(self, rng):
        x = rng.standard_normal(1000)
        spec = stft(x)
        window = analysis_window(400)
        n = np.arange(512)
        k = np.arange(257)[:, None]
        basis = np.exp(-2j * np.pi * k * n / 512)
        for t in range(spec.num_frames):
            frame = np.zeros(512)
            frame[:400] = x[t * 160:t * 160 + 400] * window
            np.testing.assert_allclose(spec.data[0, :, t], basis @ frame, atol=1e-9)

    def test_sinusoid_energy_concentrates_at_its_bin(self):
        k = 64
        t = np.arange(4000) / SAMPLE_RATE
        x = np.sin(2 * np.pi * k * SAMPLE_RATE / 512 * t)
        power = np.abs(stft(x).data[0]) ** 2
        near = power[k - 3:k + 4].sum(axis=0)
        assert np.all(near / power.sum(axis=0) >= 0.99)
        assert np.all(np.argmax(power, axis=0) == k)

    def test_multichannel_waveform(self, rng):
        samples = rng.standard_normal((3, 1600))
        spec = stft(Waveform(samples))
        assert spec.num_channels == 3
        np.testing.assert_allclose(spec.data[1], stft(samples[1]).data[0])

    def test_stft_channels_requires_equal_lengths(self):
        with pytest.raises(GeometryError):
            stft_channels([Waveform(np.zeros(800)), Waveform(np.zeros(960))])

    def test_linear(self, rng):
        x, y = rng.uniform(-1, 1, 3200), rng.uniform(-1, 1, 3200)
        a, b = 0.7, -1.9
        np.testing.assert_allclose(
            stft(a * x + b * y).data, a * stft(x).data + b * stft(y).data, atol=1e-10
        )


class TestIstft:
    """Weighted overlap-add synthesis."""

    def test_round_trip_where_window_sum_is_nonzero(self, rng):
        x = rng.standard_normal(SAMPLE_RATE // 2)
        y = istft(stft(x))
        length = y.num_samples
        assert length == (stft(x).num_frames - 1) * 160 + 400
        # the periodic Hann window is zero at its first sample
        assert y.samples[0] == 0.0
        np.testing.assert_allclose(y.samples[1:], x[1:length], atol=1e-8)

    def test_zero_spectrogram(self):
        spec = Spectrogram(np.zeros((1, 257, 5), dtype=complex))
        assert np.all(istft(spec).samples == 0)

    def test_single_frame(self, rng):
        x = rng.standard_normal(400)
        y = istft(stft(x))
        assert y.num_samples == 400
        np.testing.assert_allclose(y.samples[1:], x[1:], atol=1e-8)

    def test_no_frames(self):
        with pytest.raises(GeometryError):
            istft(Spectrogram(np.zeros((1, 257, 0), dtype=complex)))

    def test_inconsistent_window(self):
        spec = Spectrogram(np.zeros((1, 257, 2), dtype=complex), window_length=600)
        with pytest.raises(GeometryError):
            istft(spec)


class TestLogFbank:
    """Mel filterbank features."""

    def test_filterbank_shape_and_read_only(self):
        filters = mel_filterbank()
        assert filters.shape == (NUM_MELS, 257)
        assert np.all(filters >= 0)
        with pytest.raises(ValueError):
            filters[0, 0] = 1.0

    def test_zero_power_hits_floor(self):
        features = log_fbank(np.zeros((257, 6)))
        assert features.data.shape == (6, NUM_MELS)
        np.testing.assert_allclose(features.data, np.log(LOG_FLOOR))

    def test_flat_power_is_log_filter_area(self):
        features = log_fbank(np.ones((257, 3)))
        expected = np.log(mel_filterbank().sum(axis=1))
        for t in range(3):
            np.testing.assert_allclose(features.data[t], expected)

    def test_matches_matrix_product(self, rng):
        power = rng.random((257, 4))
        filters = mel_filterbank(24)
        expected = np.log(np.maximum(filters @ power, LOG_FLOOR)).T
        np.testing.assert_allclose(log_fbank(power, filters).data, expected)

    def test_negative_power(self):
        power = np.ones((257, 2))
        power[3, 1] = -1e-3
        with pytest.raises(SignalError):
            log_fbank(power)

    def test_bin_mismatch(self):
        with pytest.raises(GeometryError):
            log_fbank(np.ones((100, 2)), mel_filterbank())

    @pytest.mark.parametrize("alpha", [1.5, 10.0, 1e4])
    def test_monotone_under_power_scaling(self, rng, alpha):
        power = rng.random((257, 6)) + 0.1
        base = log_fbank(power).data
        scaled = log_fbank(alpha * power).data
        assert np.all(scaled > base)
        np.testing.assert_allclose(scaled - base, np.log(alpha), rtol=1e-10)

    def test_differentiable_version_agrees(self, rng):
        power = rng.random((2, 257, 5))
        out = log_fbank_tensor(Tensor(power), mel_filterbank(), bin_axis=1)
        assert out.shape == (2, NUM_MELS, 5)
        np.testing.assert_allclose(out.data[1], log_fbank(power[1]).data.T)


class TestWavIo:
    """16-bit PCM WAV files."""

    def test_int16_scaling(self, tmp_path):
        path = tmp_path / "half.wav"
        sf.write(str(path), np.array([16384, -16384, 0], dtype=np.int16), SAMPLE_RATE, subtype="PCM_16")
        waveform = read_wav(path, ChannelId.MIC1)
        np.testing.assert_array_equal(waveform.samples, [0.5, -0.5, 0.0])
        assert waveform.channel_id is ChannelId.MIC1

    def test_write_then_read(self, tmp_path, rng):
        samples = np.round(rng.uniform(-0.9, 0.9, 800) * 32768) / 32768
        path = tmp_path / "x.wav"
        write_wav(path, Waveform(samples))
        np.testing.assert_array_equal(read_wav(path).samples, samples)

    def test_write_clips(self, tmp_path):
        path = tmp_path / "loud.wav"
        write_wav(path, Waveform(np.array([2.0, -2.0])))
        np.testing.assert_array_equal(read_wav(path).samples, [32767 / 32768, -1.0])

    def test_stereo_file(self, tmp_path):
        path = tmp_path / "stereo.wav"
        sf.write(str(path), np.zeros((10, 2), dtype=np.int16), SAMPLE_RATE, subtype="PCM_16")
        waveform = read_wav(path)
        assert waveform.samples.shape == (2, 10)
        assert waveform.channel(1).num_samples == 10

    def test_rejects_8khz(self, tmp_path):
        path = tmp_path / "narrow.wav"
        sf.write(str(path), np.zeros(80, dtype=np.int16), 8000, subtype="PCM_16")
        with pytest.raises(WavFormatError) as excinfo:
            read_wav(path)
        assert excinfo.value.field == "sample_rate"

    def test_rejects_24_bit(self, tmp_path):
        path = tmp_path / "deep.wav"
        sf.write(str(path), np.zeros(80), SAMPLE_RATE, subtype="PCM_24")
        with pytest.raises(WavFormatError) as excinfo:
            read_wav(path)
        assert excinfo.value.field == "encoding"

    def test_write_rejects_other_rates(self, tmp_path):
        with pytest.raises(WavFormatError):
            write_wav(tmp_path / "x.wav", Waveform(np.zeros(10), sample_rate=44100))

"""16-bit PCM WAV input/output."""
from pathlib import Path
from typing import Union

import numpy as np
import soundfile as sf

from dcufront.core.errors import WavFormatError
from dcufront.core.types import SAMPLE_RATE, ChannelId, Waveform

PCM_SCALE = 32768.0
SUBTYPE = "PCM_16"


def read_wav(path: Union[str, Path], channel_id: ChannelId = ChannelId.MONO) -> Waveform:
    """
    Read a 16 kHz PCM16 WAV file; int16 values are divided by 32768.

    Multi-channel files come back as (channels, samples).

    Raises:
        WavFormatError: container, sample rate or encoding is not supported
    """
    path = str(path)
    info = sf.info(path)
    if info.format != "WAV":
        raise WavFormatError(path, "format", info.format, "WAV")
    if info.samplerate != SAMPLE_RATE:
        raise WavFormatError(path, "sample_rate", info.samplerate, SAMPLE_RATE)
    if info.subtype != SUBTYPE:
        raise WavFormatError(path, "encoding", info.subtype, SUBTYPE)
    data, _ = sf.read(path, dtype="int16", always_2d=True)
    samples = data.T.astype(np.float64) / PCM_SCALE
    if samples.shape[0] == 1:
        samples = samples[0]
    return Waveform(samples, SAMPLE_RATE, channel_id)


def write_wav(path: Union[str, Path], waveform: Waveform):
    """
    Write a waveform as PCM16; samples are scaled by 32768, rounded and clipped.

    Raises:
        WavFormatError: the waveform is not at 16 kHz
    """
    path = str(path)
    if waveform.sample_rate != SAMPLE_RATE:
        raise WavFormatError(path, "sample_rate", waveform.sample_rate, SAMPLE_RATE)
    pcm = np.clip(np.round(waveform.samples * PCM_SCALE), -32768, 32767).astype(np.int16)
    sf.write(path, pcm.T, SAMPLE_RATE, subtype=SUBTYPE, format="WAV")

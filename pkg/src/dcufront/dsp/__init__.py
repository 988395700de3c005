"""Signal-processing substrate: STFT, mel features and WAV I/O."""
from dcufront.dsp.fbank import log_fbank, log_fbank_tensor, mel_filterbank, power_spectrum
from dcufront.dsp.stft import istft, stft, stft_channels
from dcufront.dsp.wavio import read_wav, write_wav

__all__ = [
    "istft",
    "log_fbank",
    "log_fbank_tensor",
    "mel_filterbank",
    "power_spectrum",
    "read_wav",
    "stft",
    "stft_channels",
    "write_wav",
]

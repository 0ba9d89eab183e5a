"""
Frame-based spectral Wiener filter for the payload signal.

The noise power spectrum is averaged over the leading frames of the clip,
so the clip is expected to start with noise only. Per frame and bin the
gain is max(1 - N[k]/P[k], gain_floor).
"""
import logging

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.signal import check_NOLA, get_window, istft, stft

from audio.wav_io import AudioClip
from watermark.errors import InvalidInputError

LOG = logging.getLogger(__name__)


class WienerParams(BaseModel):
    frame_len: int = Field(default=256, ge=1)
    hop: int = Field(default=128, ge=1)
    noise_frames: int = Field(default=5, ge=1)
    gain_floor: float = Field(default=0.1, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _hop_within_frame(self):
        if self.hop > self.frame_len:
            raise ValueError(f"hop ({self.hop}) must not exceed frame_len ({self.frame_len})")
        # a periodic Hann frame starts at zero, so hop == frame_len leaves samples uncovered
        if not check_NOLA(get_window("hann", self.frame_len), self.frame_len, self.frame_len - self.hop):
            raise ValueError(
                f"Hann window with frame_len={self.frame_len}, hop={self.hop} cannot be inverted by overlap-add; "
                f"use hop < frame_len"
            )
        return self


def _noise_psd(samples: np.ndarray, window: np.ndarray, p: WienerParams) -> np.ndarray:
    # only frames lying fully inside the clip feed the estimate
    _, _, lead = stft(
        samples,
        window=window,
        nperseg=p.frame_len,
        noverlap=p.frame_len - p.hop,
        boundary=None,
        padded=False,
        detrend=False,
    )
    used = min(p.noise_frames, lead.shape[1])
    if used < p.noise_frames:
        LOG.warning(f"Clip holds only {used} full frames; noise estimate uses {used} of {p.noise_frames}")
    return np.mean(np.abs(lead[:, :used]) ** 2, axis=1)


def wiener_denoise(x: AudioClip, p: WienerParams = None) -> AudioClip:
    p = p or WienerParams()
    samples = x.samples
    if samples.size < p.frame_len:
        raise InvalidInputError(
            f"Clip of {samples.size} samples is shorter than one Wiener frame ({p.frame_len})"
        )

    window = get_window("hann", p.frame_len)
    noverlap = p.frame_len - p.hop

    noise = _noise_psd(samples, window, p)
    _, _, frames = stft(
        samples,
        window=window,
        nperseg=p.frame_len,
        noverlap=noverlap,
        boundary="even",
        padded=True,
        detrend=False,
    )
    power = np.abs(frames) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(power > 0, 1.0 - noise[:, None] / power, 1.0)
    gain = np.clip(gain, p.gain_floor, 1.0)

    _, restored = istft(
        frames * gain,
        window=window,
        nperseg=p.frame_len,
        noverlap=noverlap,
        boundary=True,
    )
    restored = np.real(restored[: samples.size])
    if restored.size < samples.size:
        restored = np.pad(restored, (0, samples.size - restored.size))

    LOG.info(
        f"Wiener filter: {frames.shape[1]} frames, mean gain {float(np.mean(gain)):.3f}"
    )
    return AudioClip(restored, x.sample_rate, x.source_bits)


def snr_of(clean: AudioClip, noisy: AudioClip) -> float:
    from watermark.metrics import snr_db

    return snr_db(clean.samples, noisy.samples)

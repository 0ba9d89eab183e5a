"""
Attack simulation: gain, requantization and additive white Gaussian noise,
always applied in that order.
"""
import logging
import math
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from audio.wav_io import AudioClip, ComplexClip
from watermark.errors import InvalidInputError, UndefinedSNRError

LOG = logging.getLogger(__name__)

SEED_MAX = 2**64 - 1


class ChannelSpec(BaseModel):
    awgn_snr_db: Optional[float] = None
    gain: Optional[float] = Field(default=None, gt=0)
    requantize_bits: Optional[int] = Field(default=None, ge=4, le=16)
    seed: int = Field(default=0, ge=0, le=SEED_MAX)
    identity: bool = False

    @model_validator(mode="after")
    def _has_attack(self):
        attacks = (self.awgn_snr_db, self.gain, self.requantize_bits)
        if all(a is None for a in attacks) and not self.identity:
            raise ValueError("ChannelSpec needs at least one attack or identity=True")
        if self.awgn_snr_db is not None and math.isnan(self.awgn_snr_db):
            raise ValueError("awgn_snr_db must not be NaN")
        return self

    @classmethod
    def identity_spec(cls, seed: int = 0) -> "ChannelSpec":
        return cls(identity=True, seed=seed)

    @property
    def is_identity(self) -> bool:
        no_noise = self.awgn_snr_db is None or (math.isinf(self.awgn_snr_db) and self.awgn_snr_db > 0)
        return no_noise and self.gain in (None, 1.0) and self.requantize_bits is None


def derive_seed(seed: int, index: int) -> int:
    """Independent sub-seed for channel or trial `index`."""
    state = np.random.SeedSequence([seed, index]).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def apply_awgn(x: np.ndarray, snr_db: float, seed: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if math.isinf(snr_db) and snr_db > 0:
        return x.copy()
    if not math.isfinite(snr_db):
        raise InvalidInputError(f"SNR must be finite or +inf, got {snr_db}")

    signal_energy = float(np.sum(x ** 2))
    if signal_energy == 0.0:
        raise UndefinedSNRError("Cannot add noise at a target SNR to a zero-energy signal")

    noise = np.random.default_rng(seed).standard_normal(x.shape)
    # scale the drawn vector itself so the realized SNR hits the target
    target_energy = signal_energy / 10.0 ** (snr_db / 10.0)
    noise *= math.sqrt(target_energy / float(np.sum(noise ** 2)))
    return x + noise


def apply_gain(x: np.ndarray, g: float) -> np.ndarray:
    return g * np.asarray(x, dtype=np.float64)


def apply_requantize(x: np.ndarray, bits: int) -> np.ndarray:
    if not 4 <= bits <= 16:
        raise InvalidInputError(f"requantize_bits must be in [4, 16], got {bits}")
    levels = 2.0 ** (bits - 1)
    return np.round(np.clip(np.asarray(x, dtype=np.float64), -1.0, 1.0) * levels) / levels


def _attack_plane(x: np.ndarray, spec: ChannelSpec, seed: int) -> np.ndarray:
    y = np.asarray(x, dtype=np.float64).copy()
    if spec.gain is not None:
        y = apply_gain(y, spec.gain)
    if spec.requantize_bits is not None:
        y = apply_requantize(y, spec.requantize_bits)
    if spec.awgn_snr_db is not None:
        y = apply_awgn(y, spec.awgn_snr_db, seed)
    return y


def apply_channel(clip: Union[AudioClip, ComplexClip], spec: ChannelSpec) -> Union[AudioClip, ComplexClip]:
    if spec.is_identity:
        LOG.info("Identity channel; clip passes unchanged")
        if isinstance(clip, ComplexClip):
            return ComplexClip(clip.real_part.copy(), clip.imag_part.copy(), clip.sample_rate)
        return AudioClip(clip.samples.copy(), clip.sample_rate, clip.source_bits)

    LOG.info(
        f"Channel: gain={spec.gain}, requantize_bits={spec.requantize_bits}, "
        f"awgn_snr_db={spec.awgn_snr_db}, seed={spec.seed}"
    )
    if isinstance(clip, ComplexClip):
        return ComplexClip(
            _attack_plane(clip.real_part, spec, derive_seed(spec.seed, 0)),
            _attack_plane(clip.imag_part, spec, derive_seed(spec.seed, 1)),
            clip.sample_rate,
        )
    return AudioClip(_attack_plane(clip.samples, spec, derive_seed(spec.seed, 0)), clip.sample_rate, clip.source_bits)

"""
Exponential-payload DFT watermarking.

Embedding replaces the K highest-index DFT bins of the host with exp(payload);
extraction reads the same bins back and takes the logarithm. Two modes:

- verbatim:  only the tail bins change, the inverse transform is complex and is
             kept as a two-plane ComplexClip.
- symmetric: the conjugate mirror bins are set as well, so the inverse transform
             is real and the output is an ordinary AudioClip.
"""
import logging
import math
from dataclasses import InitVar, dataclass, field
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field

from audio.wav_io import AudioClip, ComplexClip, SidecarMeta
from dsp.denoise import WienerParams, wiener_denoise
from dsp.spectrum import TRANSFORM_PATH, Spectrum, forward_dft, inverse_dft, real_part
from watermark.errors import (
    CapacityError,
    EmbeddingIntegrityError,
    ExtractionIntegrityError,
    InvalidInputError,
    PayloadOverflowError,
)

LOG = logging.getLogger(__name__)

Mode = Literal["verbatim", "symmetric"]

OVERFLOW_GUARD = 16.0
DEFAULT_EPS = 1e-12
IMAG_TOLERANCE = 1e-9


@dataclass
class WatermarkPayload:
    samples: np.ndarray
    sample_rate: int
    # extraction output may sit below the guard after eps clamping
    guarded: InitVar[bool] = True

    def __post_init__(self, guarded: bool):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.samples.size < 1:
            raise InvalidInputError("Payload needs at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidInputError("Payload samples must be finite")
        if guarded:
            _check_guard(self.samples)
        self.sample_rate = int(self.sample_rate)

    @property
    def k(self) -> int:
        return self.samples.size

    @classmethod
    def from_clip(cls, clip: AudioClip) -> "WatermarkPayload":
        return cls(clip.samples, clip.sample_rate)


class EmbedConfig(BaseModel):
    mode: Mode = "symmetric"
    eps: float = Field(default=DEFAULT_EPS, gt=0)
    denoise: Optional[WienerParams] = None


@dataclass
class EmbedResult:
    watermarked: Union[AudioClip, ComplexClip]
    meta: SidecarMeta
    modified_bins: np.ndarray
    imag_residual: float = 0.0
    transform_path: str = TRANSFORM_PATH

    @property
    def bin_range(self) -> tuple[int, int]:
        n = len(self.watermarked)
        return n - self.meta.k, n - 1


@dataclass
class ExtractionReport:
    clamped_count: int
    max_imag_residual: float
    bins: tuple[int, int]
    warnings: list[str] = field(default_factory=list)


def _check_guard(samples: np.ndarray) -> None:
    worst = float(np.max(np.abs(samples)))
    if worst > OVERFLOW_GUARD:
        raise PayloadOverflowError(
            f"Payload magnitude {worst:.4g} exceeds the exp overflow guard of {OVERFLOW_GUARD}"
        )


def transform_payload(w: WatermarkPayload) -> np.ndarray:
    _check_guard(w.samples)
    return np.exp(w.samples)


def inverse_transform(v: np.ndarray, eps: float = DEFAULT_EPS, strict: bool = False) -> tuple[np.ndarray, int]:
    """Natural log of the bin readout; returns (values, clamped_count)."""
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("Extracted bin values must be finite")
    if eps <= 0:
        raise InvalidInputError(f"eps must be positive, got {eps}")

    nonpositive = int(np.count_nonzero(v <= 0))
    if strict and nonpositive:
        raise ExtractionIntegrityError(
            f"{nonpositive} extracted bin values are not positive; the carrier was altered"
        )
    clamped = int(np.count_nonzero(v < eps))
    return np.log(np.maximum(v, eps)), clamped


def capacity(n: int, mode: Mode) -> int:
    """Largest payload length a host of n samples can carry."""
    if n < 2:
        raise InvalidInputError(f"Host needs at least 2 samples, got {n}")
    if mode == "verbatim":
        # bin 0 (DC) is never touched
        return n - 1
    if mode == "symmetric":
        # embed and mirror sets stay disjoint; DC and Nyquist untouched
        return math.ceil(n / 2) - 1
    raise InvalidInputError(f"Unknown mode: {mode}")


def embed_bins(n: int, k: int) -> np.ndarray:
    return np.arange(n - k, n)


def mirror_bins(n: int, bins: np.ndarray) -> np.ndarray:
    return (n - bins) % n


def embed(host: AudioClip, payload: WatermarkPayload, cfg: EmbedConfig = None) -> EmbedResult:
    cfg = cfg or EmbedConfig()
    n, k = len(host), payload.k
    k_max = capacity(n, cfg.mode)
    if k > k_max:
        raise CapacityError(k, k_max, cfg.mode)

    if cfg.denoise is not None:
        LOG.info("Denoising payload before embedding")
        cleaned = wiener_denoise(AudioClip(payload.samples, payload.sample_rate), cfg.denoise)
        payload = WatermarkPayload(cleaned.samples, payload.sample_rate)

    spectrum = forward_dft(host.samples, host.sample_rate)
    t = transform_payload(payload)

    coeffs = spectrum.coeffs.copy()
    bins = embed_bins(n, k)
    coeffs[bins] = t
    modified = bins
    if cfg.mode == "symmetric":
        # t is real and positive, so its conjugate is itself
        mirrors = mirror_bins(n, bins)
        coeffs[mirrors] = t
        modified = np.sort(np.concatenate([mirrors, bins]))

    signal = inverse_dft(Spectrum(coeffs, host.sample_rate))
    imag_residual = 0.0
    if cfg.mode == "verbatim":
        watermarked = ComplexClip.from_complex(signal, host.sample_rate)
    else:
        imag_residual = float(np.max(np.abs(signal.imag)))
        if imag_residual > IMAG_TOLERANCE:
            raise EmbeddingIntegrityError(
                f"Symmetric embedding left an imaginary residual of {imag_residual:.3g}"
            )
        watermarked = AudioClip(real_part(signal), host.sample_rate, "float")

    meta = SidecarMeta(k=k, mode=cfg.mode, payload_sample_rate=payload.sample_rate, eps=cfg.eps)
    LOG.info(f"Embedded K={k} into N={n} ({cfg.mode}); bins {n - k}..{n - 1}")
    return EmbedResult(watermarked, meta, modified, imag_residual)


def extract(
    wm: Union[AudioClip, ComplexClip],
    meta: SidecarMeta,
    strict: bool = False,
) -> tuple[WatermarkPayload, ExtractionReport]:
    n = len(wm)
    k_max = capacity(n, meta.mode)
    if meta.k > k_max:
        raise CapacityError(meta.k, k_max, meta.mode)

    if isinstance(wm, ComplexClip):
        if meta.mode == "symmetric":
            LOG.warning("Symmetric metadata paired with a complex carrier; reading it as complex")
        spectrum = forward_dft(wm.values, wm.sample_rate)
    else:
        if meta.mode == "verbatim":
            LOG.warning("Verbatim metadata paired with a real carrier; the imaginary plane is missing")
        spectrum = forward_dft(wm.samples, wm.sample_rate)

    bins = embed_bins(n, meta.k)
    readout = spectrum.coeffs[bins]
    values, clamped = inverse_transform(readout.real, meta.eps, strict)

    report = ExtractionReport(
        clamped_count=clamped,
        max_imag_residual=float(np.max(np.abs(readout.imag))),
        bins=(n - meta.k, n - 1),
    )
    if clamped:
        message = f"{clamped} of {meta.k} bin values clamped at eps={meta.eps:g} before the log"
        LOG.warning(message)
        report.warnings.append(message)

    recovered = WatermarkPayload(values, meta.payload_sample_rate, guarded=False)
    return recovered, report

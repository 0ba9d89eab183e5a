"""
Whole-clip DFT with a fixed bin convention.

Forward transform is unnormalized, inverse carries the 1/N factor:

    X[k] = sum_n x[n] exp(-2j*pi*k*n/N)
    x[n] = (1/N) sum_k X[k] exp(+2j*pi*k*n/N)

Bin k maps to k*fs/N for k <= N/2 and to (k-N)*fs/N above that.
numpy's pocketfft backend handles every length directly, so no zero
padding is ever applied.
"""
import logging
from dataclasses import dataclass

import numpy as np

from watermark.errors import InvalidInputError

LOG = logging.getLogger(__name__)

TRANSFORM_PATH = "direct"


@dataclass
class Spectrum:
    coeffs: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128).reshape(-1)
        if self.coeffs.size < 1:
            raise InvalidInputError("Spectrum needs at least one coefficient")
        if not np.all(np.isfinite(self.coeffs)):
            raise InvalidInputError("Spectrum coefficients must be finite")

    @property
    def n(self) -> int:
        return self.coeffs.size

    def frequencies(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, d=1.0 / self.sample_rate)


def bin_frequency(k: int, n: int, fs: float) -> float:
    """Frequency in Hz of 0-based bin k of an n-point transform."""
    k = k % n
    return (k if k <= n // 2 else k - n) * fs / n


def forward_dft(x: np.ndarray, fs: int) -> Spectrum:
    x = np.asarray(x)
    if x.size < 1:
        raise InvalidInputError("Cannot transform an empty vector")
    coeffs = np.fft.fft(x.astype(np.complex128 if np.iscomplexobj(x) else np.float64).reshape(-1))
    return Spectrum(coeffs, fs)


def inverse_dft(s: Spectrum) -> np.ndarray:
    return np.fft.ifft(s.coeffs)


def real_part(x: np.ndarray) -> np.ndarray:
    return np.real(np.asarray(x)).astype(np.float64)

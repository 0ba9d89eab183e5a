import os
import struct
import sys

import numpy as np
import pytest

# Add src to path
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))


def _riff_bytes(tag: int, channels: int, rate: int, bits: int, data: bytes, data_size: int = None) -> bytes:
    block_align = channels * bits // 8
    fmt = struct.pack("<HHIIHH", tag, channels, rate, rate * block_align, block_align, bits)
    size = len(data) if data_size is None else data_size
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", size) + data
    return b"RIFF" + struct.pack("<I", len(body)) + body


@pytest.fixture(scope="session")
def riff_bytes():
    """Builds a RIFF/WAVE image by hand; data_size lets a test lie about the data length."""
    return _riff_bytes


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def host_clip(rng):
    from audio.wav_io import AudioClip

    n = 1024
    t = np.arange(n) / 22050
    samples = 0.3 * np.sin(2 * np.pi * 440 * t) + 0.05 * rng.standard_normal(n)
    return AudioClip(samples, 22050, 16)


@pytest.fixture
def payload(rng):
    from watermark.embedding import WatermarkPayload

    return WatermarkPayload(rng.uniform(-1, 1, 64), 8000)

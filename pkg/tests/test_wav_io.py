import json
import os
import struct
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.io import wavfile

# Add src to path
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from audio.wav_io import (
    AudioClip,
    ComplexClip,
    SidecarMeta,
    read_carrier,
    read_complex,
    read_meta,
    read_wav,
    sidecar_path,
    write_complex,
    write_meta,
    write_wav,
)
from watermark.errors import FormatError, MissingFileError, SidecarError, VersionError


def test_pcm16_scaling(tmp_path, riff_bytes):
    path = tmp_path / "four.wav"
    path.write_bytes(riff_bytes(1, 1, 22050, 16, struct.pack("<4h", 0, 16384, -16384, -32768)))

    clip = read_wav(path)
    assert clip.samples.tolist() == [0.0, 0.5, -0.5, -1.0]
    assert clip.sample_rate == 22050
    assert clip.source_bits == 16


def test_truncated_data_chunk(tmp_path, riff_bytes):
    path = tmp_path / "short.wav"
    path.write_bytes(riff_bytes(1, 1, 8000, 16, b"\x00\x01" * 4, data_size=100))
    with pytest.raises(FormatError, match="truncated data chunk"):
        read_wav(path)


def test_distinct_format_errors(tmp_path, riff_bytes):
    not_riff = tmp_path / "a.wav"
    not_riff.write_bytes(b"OggS" + b"\x00" * 40)
    with pytest.raises(FormatError, match="not a RIFF/WAVE"):
        read_wav(not_riff)

    no_fmt = tmp_path / "b.wav"
    body = b"WAVE" + b"data" + struct.pack("<I", 2) + b"\x00\x00"
    no_fmt.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    with pytest.raises(FormatError, match="missing the 'fmt '"):
        read_wav(no_fmt)

    eight_bit = tmp_path / "c.wav"
    eight_bit.write_bytes(riff_bytes(1, 1, 8000, 8, b"\x80\x80"))
    with pytest.raises(FormatError, match="unsupported codec"):
        read_wav(eight_bit)

    five_channels = tmp_path / "d.wav"
    five_channels.write_bytes(riff_bytes(1, 5, 8000, 16, b"\x00" * 10))
    with pytest.raises(FormatError, match="channels"):
        read_wav(five_channels)


def test_missing_file(tmp_path):
    with pytest.raises(MissingFileError):
        read_wav(tmp_path / "nope.wav")
    with pytest.raises(FileNotFoundError):
        read_wav(tmp_path / "nope.wav")


def test_float64_roundtrip_is_exact(tmp_path, rng):
    clip = AudioClip(rng.uniform(-1, 1, 1000), 22050)
    write_wav(clip, tmp_path / "f.wav", "float64")
    back = read_wav(tmp_path / "f.wav")
    assert np.array_equal(back.samples, clip.samples)
    assert back.source_bits == "float"


def test_pcm16_roundtrip_within_one_lsb(tmp_path, rng):
    clip = AudioClip(rng.uniform(-1, 1, 1000), 8000)
    assert write_wav(clip, tmp_path / "p.wav", "pcm16") == 0
    back = read_wav(tmp_path / "p.wav")
    assert np.max(np.abs(back.samples - clip.samples)) <= 1 / 32768


def test_pcm16_clamps_and_counts(tmp_path):
    clip = AudioClip([1.7, 0.0, -0.25], 8000)
    assert write_wav(clip, tmp_path / "c.wav", "pcm16") == 1
    back = read_wav(tmp_path / "c.wav")
    assert abs(back.samples[0] - 1.0) <= 1 / 32768
    assert back.samples[2] == -0.25


def test_written_files_read_back_with_scipy(tmp_path, rng):
    write_wav(AudioClip([0.5, -0.5, 1.2], 8000), tmp_path / "p.wav", "pcm16")
    rate, data = wavfile.read(tmp_path / "p.wav")
    assert rate == 8000
    assert data.dtype == np.int16
    assert data.tolist() == [16384, -16384, 32767]

    clip = ComplexClip(rng.standard_normal(16), rng.standard_normal(16), 22050)
    write_complex(clip, tmp_path / "c.wav")
    rate, data = wavfile.read(tmp_path / "c.wav")
    assert data.dtype == np.float64
    assert data.shape == (16, 2)
    assert np.array_equal(data[:, 1], clip.imag_part)


def test_float32_file_is_read(tmp_path, riff_bytes):
    data = np.array([0.25, -0.75], dtype="<f4").tobytes()
    (tmp_path / "f32.wav").write_bytes(riff_bytes(3, 1, 16000, 32, data))
    clip = read_wav(tmp_path / "f32.wav")
    assert clip.samples.tolist() == [0.25, -0.75]


def test_stereo_needs_explicit_channel(tmp_path, rng):
    path = tmp_path / "stereo.wav"
    write_complex(ComplexClip(rng.uniform(-1, 1, 32), rng.uniform(-1, 1, 32), 8000), path)
    with pytest.raises(FormatError, match="channel"):
        read_wav(path)
    right = read_wav(path, channel=1)
    assert right.samples.size == 32


def test_complex_roundtrip_bit_exact(tmp_path, rng):
    clip = ComplexClip(rng.standard_normal(256), rng.standard_normal(256), 22050)
    write_complex(clip, tmp_path / "c.wav")
    back = read_complex(tmp_path / "c.wav")
    assert np.array_equal(back.real_part, clip.real_part)
    assert np.array_equal(back.imag_part, clip.imag_part)
    assert back.sample_rate == 22050


def test_complex_zero_imag_stays_zero(tmp_path, rng):
    clip = ComplexClip(rng.standard_normal(64), np.zeros(64), 8000)
    write_complex(clip, tmp_path / "z.wav")
    assert np.all(read_complex(tmp_path / "z.wav").imag_part == 0.0)


def test_read_complex_rejects_mono(tmp_path):
    write_wav(AudioClip([0.1, 0.2], 8000), tmp_path / "mono.wav")
    with pytest.raises(FormatError, match="2 channels"):
        read_complex(tmp_path / "mono.wav")


def test_read_carrier_picks_layout(tmp_path, rng):
    write_wav(AudioClip([0.1, 0.2], 8000), tmp_path / "mono.wav")
    write_complex(ComplexClip([0.1, 0.2], [0.0, 0.3], 8000), tmp_path / "cplx.wav")
    assert isinstance(read_carrier(tmp_path / "mono.wav"), AudioClip)
    assert isinstance(read_carrier(tmp_path / "cplx.wav"), ComplexClip)


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=256))
def test_decoder_never_yields_non_finite(tail):
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "fuzz.wav"
        path.write_bytes(b"RIFF" + struct.pack("<I", 4 + len(tail)) + b"WAVE" + tail)
        try:
            clip = read_wav(path, channel=0)
        except FormatError:
            return
        assert np.all(np.isfinite(clip.samples))


@settings(max_examples=100, deadline=None)
@given(data=st.binary(min_size=8, max_size=64).map(lambda b: b[: len(b) - len(b) % 8]))
def test_float_garbage_is_rejected_or_finite(riff_bytes, data):
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "fuzz.wav"
        path.write_bytes(riff_bytes(3, 1, 8000, 64, data))
        try:
            clip = read_wav(path)
        except FormatError:
            return
        assert np.all(np.isfinite(clip.samples))


# ----------------------------
# Sidecar metadata
# ----------------------------
def test_sidecar_roundtrip(tmp_path):
    meta = SidecarMeta(k=8000, mode="symmetric", payload_sample_rate=8000, eps=1e-12, format_version=1)
    path = sidecar_path(tmp_path / "wm.wav")
    write_meta(meta, path)

    assert read_meta(path) == meta
    assert set(json.loads(path.read_text())) == {"k", "mode", "payload_sample_rate", "eps", "format_version"}


def test_sidecar_path_appends_suffix(tmp_path):
    assert sidecar_path(tmp_path / "wm.wav").name == "wm.wav.wmmeta.json"


def test_sidecar_rejects_zero_k():
    with pytest.raises(ValueError):
        SidecarMeta(k=0, mode="symmetric", payload_sample_rate=8000, eps=1e-12)


def test_sidecar_rejects_future_version(tmp_path):
    path = tmp_path / "v2.wmmeta.json"
    path.write_text(json.dumps({"k": 8, "mode": "verbatim", "payload_sample_rate": 8000, "eps": 1e-12, "format_version": 2}))
    with pytest.raises(VersionError, match="format_version 2"):
        read_meta(path)


def test_sidecar_corrupt_or_missing(tmp_path):
    bad = tmp_path / "bad.wmmeta.json"
    bad.write_text("{not json")
    with pytest.raises(SidecarError):
        read_meta(bad)
    with pytest.raises(SidecarError, match="not found"):
        read_meta(tmp_path / "absent.wmmeta.json")

    invalid = tmp_path / "invalid.wmmeta.json"
    invalid.write_text(json.dumps({"k": 0, "mode": "symmetric", "payload_sample_rate": 8000, "eps": 1e-12, "format_version": 1}))
    with pytest.raises(SidecarError):
        read_meta(invalid)

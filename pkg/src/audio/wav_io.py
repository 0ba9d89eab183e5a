import json
import struct
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError
from scipy.io import wavfile

from watermark.errors import (
    FormatError,
    InvalidInputError,
    MissingFileError,
    SidecarError,
    VersionError,
)

LOG = logging.getLogger(__name__)

PCM16_SCALE = 32768.0
SIDECAR_SUFFIX = ".wmmeta.json"
FORMAT_VERSION = 1

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

PathLike = Union[str, Path]


@dataclass
class AudioClip:
    """Real-valued sampled signal; amplitudes nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int
    source_bits: Union[int, str] = "float"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.samples.size < 1:
            raise InvalidInputError("AudioClip needs at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidInputError("AudioClip samples must be finite")
        if int(self.sample_rate) < 1:
            raise InvalidInputError(f"Invalid sample rate: {self.sample_rate}")
        self.sample_rate = int(self.sample_rate)

    def __len__(self) -> int:
        return self.samples.size


@dataclass
class ComplexClip:
    """Complex signal kept as two real planes; carrier of verbatim-mode output."""

    real_part: np.ndarray
    imag_part: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.real_part = np.asarray(self.real_part, dtype=np.float64).reshape(-1)
        self.imag_part = np.asarray(self.imag_part, dtype=np.float64).reshape(-1)
        if self.real_part.size < 1 or self.real_part.size != self.imag_part.size:
            raise InvalidInputError(
                f"ComplexClip planes must have equal nonzero length "
                f"(got {self.real_part.size} and {self.imag_part.size})"
            )
        if not (np.all(np.isfinite(self.real_part)) and np.all(np.isfinite(self.imag_part))):
            raise InvalidInputError("ComplexClip values must be finite")
        if int(self.sample_rate) < 1:
            raise InvalidInputError(f"Invalid sample rate: {self.sample_rate}")
        self.sample_rate = int(self.sample_rate)

    @classmethod
    def from_complex(cls, values: np.ndarray, sample_rate: int) -> "ComplexClip":
        values = np.asarray(values, dtype=np.complex128)
        return cls(values.real.copy(), values.imag.copy(), sample_rate)

    @property
    def values(self) -> np.ndarray:
        return self.real_part + 1j * self.imag_part

    def __len__(self) -> int:
        return self.real_part.size


class SidecarMeta(BaseModel):
    """Metadata written beside every watermarked file so extraction can stay blind."""

    k: int = Field(ge=1)
    mode: Literal["verbatim", "symmetric"]
    payload_sample_rate: int = Field(ge=1)
    eps: float = Field(gt=0)
    format_version: Literal[1] = FORMAT_VERSION
    # informational, written by embed
    embed_snr_db: Optional[float] = None


def sidecar_path(audio_path: PathLike) -> Path:
    audio_path = Path(audio_path)
    return audio_path.with_name(audio_path.name + SIDECAR_SUFFIX)


# ----------------------------
# RIFF/WAVE decoding
# ----------------------------
def _parse_riff(data: bytes, path: Path) -> tuple[dict, bytes]:
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"'{path}' is not a RIFF/WAVE file")

    fmt = None
    payload = None
    offset = 12
    while offset < len(data):
        if len(data) - offset < 8:
            raise FormatError(f"'{path}' has a truncated chunk header at byte {offset}")
        chunk_id, size = struct.unpack("<4sI", data[offset:offset + 8])
        body = data[offset + 8:offset + 8 + size]
        if len(body) < size:
            if chunk_id == b"data":
                raise FormatError(
                    f"'{path}' has a truncated data chunk: header declares {size} bytes, "
                    f"file holds {len(body)}"
                )
            raise FormatError(f"'{path}' has a truncated '{chunk_id.decode('latin-1')}' chunk")

        if chunk_id == b"fmt ":
            fmt = _parse_fmt(body, path)
        elif chunk_id == b"data" and payload is None:
            payload = body
        # chunks are word aligned
        offset += 8 + size + (size & 1)

    if fmt is None:
        raise FormatError(f"'{path}' is missing the 'fmt ' chunk")
    if payload is None:
        raise FormatError(f"'{path}' is missing the 'data' chunk")
    return fmt, payload


def _parse_fmt(body: bytes, path: Path) -> dict:
    if len(body) < 16:
        raise FormatError(f"'{path}' has a malformed 'fmt ' chunk ({len(body)} bytes)")
    tag, channels, rate, _, block_align, bits = struct.unpack("<HHIIHH", body[:16])
    if tag == WAVE_FORMAT_EXTENSIBLE:
        if len(body) < 26:
            raise FormatError(f"'{path}' has a malformed WAVE_FORMAT_EXTENSIBLE header")
        tag = struct.unpack("<H", body[24:26])[0]

    if tag == WAVE_FORMAT_PCM and bits == 16:
        dtype = "<i2"
    elif tag == WAVE_FORMAT_IEEE_FLOAT and bits in (32, 64):
        dtype = "<f4" if bits == 32 else "<f8"
    else:
        raise FormatError(f"'{path}' uses an unsupported codec (format tag {tag:#06x}, {bits} bits)")

    if channels not in (1, 2):
        raise FormatError(f"'{path}' has {channels} channels; only mono and stereo are supported")
    if rate < 1:
        raise FormatError(f"'{path}' declares sample rate {rate}")
    if block_align != channels * bits // 8:
        raise FormatError(
            f"'{path}' declares block align {block_align}, expected {channels * bits // 8}"
        )
    return {"tag": tag, "channels": channels, "rate": rate, "bits": bits, "dtype": dtype}


def _read_frames(path: PathLike) -> tuple[np.ndarray, dict]:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"Audio file not found: {path}")
    fmt, payload = _parse_riff(path.read_bytes(), path)

    frame_bytes = fmt["channels"] * fmt["bits"] // 8
    if len(payload) % frame_bytes:
        raise FormatError(
            f"'{path}' data chunk length {len(payload)} is not a multiple of the frame size {frame_bytes}"
        )
    if not payload:
        raise FormatError(f"'{path}' holds no samples")

    frames = np.frombuffer(payload, dtype=fmt["dtype"]).reshape(-1, fmt["channels"])
    if fmt["tag"] == WAVE_FORMAT_PCM:
        frames = frames.astype(np.float64) / PCM16_SCALE
    else:
        frames = frames.astype(np.float64)
        if not np.all(np.isfinite(frames)):
            raise FormatError(f"'{path}' contains non-finite float samples")
    return frames, fmt


def read_wav(path: PathLike, channel: Optional[int] = None) -> AudioClip:
    """Read a mono clip; stereo files need an explicit channel index."""
    frames, fmt = _read_frames(path)
    if fmt["channels"] == 2:
        if channel is None:
            raise FormatError(f"'{path}' is stereo; select a channel (0 or 1) explicitly")
        if channel not in (0, 1):
            raise FormatError(f"Channel {channel} does not exist in stereo file '{path}'")
        samples = frames[:, channel]
    else:
        if channel not in (None, 0):
            raise FormatError(f"Channel {channel} does not exist in mono file '{path}'")
        samples = frames[:, 0]

    source_bits = fmt["bits"] if fmt["tag"] == WAVE_FORMAT_PCM else "float"
    LOG.info(f"Read {samples.size} samples at {fmt['rate']} Hz from {path}")
    return AudioClip(samples.copy(), fmt["rate"], source_bits)


def read_carrier(path: PathLike, mode: Optional[str] = None) -> Union[AudioClip, ComplexClip]:
    """Read a watermarked file: complex for verbatim, real for symmetric, else by channel count."""
    if mode == "verbatim":
        return read_complex(path)
    if mode == "symmetric":
        return read_wav(path)
    frames, fmt = _read_frames(path)
    if fmt["channels"] == 2:
        return ComplexClip(frames[:, 0].copy(), frames[:, 1].copy(), fmt["rate"])
    source_bits = fmt["bits"] if fmt["tag"] == WAVE_FORMAT_PCM else "float"
    return AudioClip(frames[:, 0].copy(), fmt["rate"], source_bits)


def read_complex(path: PathLike) -> ComplexClip:
    frames, fmt = _read_frames(path)
    if fmt["channels"] != 2:
        raise FormatError(f"'{path}' is not a complex carrier: expected 2 channels, found {fmt['channels']}")
    if fmt["dtype"] != "<f8":
        LOG.warning(f"Complex carrier {path} is not float64; recovery may be inexact")
    return ComplexClip(frames[:, 0].copy(), frames[:, 1].copy(), fmt["rate"])


# ----------------------------
# RIFF/WAVE encoding
# ----------------------------
def write_wav(clip: AudioClip, path: PathLike, encoding: Literal["pcm16", "float64"] = "float64") -> int:
    """Write a mono clip and return how many samples were clipped (pcm16 only)."""
    if encoding == "pcm16":
        clamped = np.clip(clip.samples, -1.0, 1.0)
        clip_count = int(np.count_nonzero(clamped != clip.samples))
        if clip_count:
            LOG.warning(f"Clipped {clip_count} samples to [-1, 1] while writing {path}")
        ints = np.clip(np.round(clamped * PCM16_SCALE), -32768, 32767).astype("<i2")
        wavfile.write(path, clip.sample_rate, ints)
        return clip_count
    if encoding == "float64":
        wavfile.write(path, clip.sample_rate, clip.samples.astype("<f8"))
        return 0
    raise InvalidInputError(f"Unknown encoding: {encoding}")


def write_complex(clip: ComplexClip, path: PathLike) -> None:
    frames = np.column_stack([clip.real_part, clip.imag_part]).astype("<f8")
    wavfile.write(path, clip.sample_rate, frames)


# ----------------------------
# Sidecar metadata
# ----------------------------
def write_meta(meta: SidecarMeta, path: PathLike) -> None:
    Path(path).write_text(meta.model_dump_json(exclude_none=True, indent=2), encoding="utf-8")


def read_meta(path: PathLike) -> SidecarMeta:
    path = Path(path)
    if not path.is_file():
        raise SidecarError(f"Sidecar metadata not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise SidecarError(f"Sidecar {path} is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise SidecarError(f"Sidecar {path} must hold a JSON object")

    version = raw.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(
            f"Sidecar {path} has format_version {version!r}; this build reads version {FORMAT_VERSION}"
        )
    try:
        return SidecarMeta.model_validate(raw)
    except ValidationError as e:
        raise SidecarError(f"Sidecar {path} is invalid: {e}") from e

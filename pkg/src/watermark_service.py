import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from audio.wav_io import (
    AudioClip,
    ComplexClip,
    SidecarMeta,
    read_carrier,
    read_meta,
    read_wav,
    sidecar_path,
    write_complex,
    write_meta,
    write_wav,
)
from dsp.spectrum import TRANSFORM_PATH, bin_frequency
from watermark.channel import ChannelSpec, apply_channel
from watermark.embedding import DEFAULT_EPS, EmbedConfig, WatermarkPayload, embed, extract
from watermark.errors import InvalidInputError, UndefinedSNRError
from watermark.metrics import evaluate_pipeline, figure_data, snr_db, summarize_reports

LOG = logging.getLogger(__name__)

# payload rate of the reference experiment, used when no sidecar says otherwise
DEFAULT_PAYLOAD_RATE = 8000


def _commit(outputs: list[tuple[Path, Callable[[Path], object]]]) -> list:
    """Write every output or none of them; returns each writer's result.

    Writers fill temporary files beside their targets, and targets are only
    replaced once every writer has succeeded, so a failed run leaves existing
    files untouched.
    """
    staged = []
    try:
        results = []
        for path, writer in outputs:
            fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".part", dir=path.parent)
            os.close(fd)
            staged.append((Path(tmp), path))
            results.append(writer(Path(tmp)))
        for tmp, path in staged:
            os.replace(tmp, path)
    except Exception:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    return results


def _write_carrier(clip, path: Path, encoding: str) -> int:
    if isinstance(clip, ComplexClip):
        write_complex(clip, path)
        return 0
    return write_wav(clip, path, encoding)


class WatermarkService:
    @staticmethod
    def embed_files(
        host_path: str,
        payload_path: str,
        out_path: str,
        cfg: EmbedConfig,
        channel: Optional[int] = None,
        encoding: str = "float64",
    ) -> dict:
        host = read_wav(host_path, channel)
        payload = WatermarkPayload.from_clip(read_wav(payload_path))
        result = embed(host, payload, cfg)

        real_signal = (
            result.watermarked.real_part
            if isinstance(result.watermarked, ComplexClip)
            else result.watermarked.samples
        )
        try:
            embed_snr = snr_db(host.samples, real_signal)
        except UndefinedSNRError:
            embed_snr = None
        meta = result.meta.model_copy(update={"embed_snr_db": embed_snr})

        if cfg.mode == "verbatim" and encoding != "float64":
            LOG.warning("Verbatim output is always stored as 2-channel float64; ignoring encoding")
        elif encoding == "pcm16":
            LOG.warning("pcm16 quantization adds noise to every bin; recovery will not be exact")

        out = Path(out_path)
        clip_count, _ = _commit([
            (out, lambda p: _write_carrier(result.watermarked, p, encoding)),
            (sidecar_path(out), lambda p: write_meta(meta, p)),
        ])
        LOG.info(f"Wrote {out} and {sidecar_path(out)}")

        first, last = result.bin_range
        return {
            "n": len(host),
            "k": payload.k,
            "mode": cfg.mode,
            "bins": [first, last],
            "modified_bin_count": int(result.modified_bins.size),
            "embed_snr_db": embed_snr,
            "imag_residual": result.imag_residual,
            "clip_count": clip_count,
            "transform": result.transform_path,
            "out": str(out),
        }

    @staticmethod
    def resolve_meta(
        in_path: str,
        k: Optional[int] = None,
        mode: Optional[str] = None,
        eps: Optional[float] = None,
        payload_rate: Optional[int] = None,
    ) -> SidecarMeta:
        """Sidecar first; explicit values override it with a warning."""
        side = sidecar_path(in_path)
        if side.is_file():
            meta = read_meta(side)
            overrides = {
                name: value
                for name, value in (("k", k), ("mode", mode), ("eps", eps), ("payload_sample_rate", payload_rate))
                if value is not None and value != getattr(meta, name)
            }
            if overrides:
                LOG.warning(f"Overriding sidecar {side} with {overrides}")
                meta = SidecarMeta.model_validate({**meta.model_dump(), **overrides})
            return meta

        if k is None or mode is None:
            raise InvalidInputError(f"Sidecar {side} not found; pass --k and --mode to extract without it")
        LOG.warning(f"No sidecar at {side}; using k={k}, mode={mode}")
        return SidecarMeta(
            k=k,
            mode=mode,
            payload_sample_rate=payload_rate or DEFAULT_PAYLOAD_RATE,
            eps=eps if eps is not None else DEFAULT_EPS,
        )

    @staticmethod
    def extract_files(
        in_path: str,
        out_path: str,
        k: Optional[int] = None,
        mode: Optional[str] = None,
        strict: bool = False,
        eps: Optional[float] = None,
        payload_rate: Optional[int] = None,
        encoding: str = "float64",
    ) -> dict:
        meta = WatermarkService.resolve_meta(in_path, k, mode, eps, payload_rate)
        carrier = read_carrier(in_path, meta.mode)
        recovered, report = extract(carrier, meta, strict=strict)

        clip = AudioClip(recovered.samples, recovered.sample_rate, "float")
        (clip_count,) = _commit([(Path(out_path), lambda p: write_wav(clip, p, encoding))])
        return {
            "k": meta.k,
            "mode": meta.mode,
            "bins": list(report.bins),
            "clamped_count": report.clamped_count,
            "max_imag_residual": report.max_imag_residual,
            "clip_count": clip_count,
            "out": str(out_path),
        }

    @staticmethod
    def attack_files(in_path: str, out_path: str, spec: ChannelSpec, encoding: str = "float64") -> dict:
        side = sidecar_path(in_path)
        meta = read_meta(side) if side.is_file() else None
        carrier = read_carrier(in_path, meta.mode if meta else None)
        attacked = apply_channel(carrier, spec)

        out = Path(out_path)
        outputs = [(out, lambda p: _write_carrier(attacked, p, encoding))]
        if meta is not None:
            # the sidecar travels with the attacked copy
            outputs.append((sidecar_path(out), lambda p: write_meta(meta, p)))
        clip_count = _commit(outputs)[0]
        return {
            "complex": isinstance(attacked, ComplexClip),
            "out": str(out),
            "clip_count": clip_count,
            **spec.model_dump(),
        }

    @staticmethod
    def evaluate_files(
        host_path: str,
        payload_path: str,
        cfg: EmbedConfig,
        snr_list: list[float],
        seeds: int,
        json_path: str,
        base_seed: int = 0,
        channel: Optional[int] = None,
        workers: int = 4,
        plot_data_path: Optional[str] = None,
    ):
        host = read_wav(host_path, channel)
        payload = WatermarkPayload.from_clip(read_wav(payload_path))
        specs = [ChannelSpec(awgn_snr_db=snr, seed=base_seed) for snr in snr_list]

        reports = evaluate_pipeline(host, payload, cfg, specs, seeds, workers=workers)
        body = json.dumps([r.model_dump() for r in reports], indent=2)
        outputs = [(Path(json_path), lambda p: p.write_text(body, encoding="utf-8"))]

        if plot_data_path is not None:
            # figures come from the unattacked pipeline
            result = embed(host, payload, cfg)
            recovered, _ = extract(result.watermarked, result.meta)
            figures = json.dumps(figure_data(host, result.watermarked, payload, recovered))
            outputs.append((Path(plot_data_path), lambda p: p.write_text(figures, encoding="utf-8")))

        _commit(outputs)
        return reports, summarize_reports(reports)

    @staticmethod
    def inspect_file(in_path: str, host_path: Optional[str] = None, channel: Optional[int] = None) -> dict:
        meta = read_meta(sidecar_path(in_path))
        carrier = read_carrier(in_path, meta.mode)
        n = len(carrier)

        embed_snr = meta.embed_snr_db
        if host_path is not None:
            host = read_wav(host_path, channel)
            real_signal = carrier.real_part if isinstance(carrier, ComplexClip) else carrier.samples
            if len(host) != n:
                raise InvalidInputError(f"Host has {len(host)} samples, carrier has {n}")
            embed_snr = snr_db(host.samples, real_signal)

        first, last = n - meta.k, n - 1
        freqs = sorted({bin_frequency(first, n, carrier.sample_rate), bin_frequency(last, n, carrier.sample_rate)})
        return {
            "n": n,
            "k": meta.k,
            "mode": meta.mode,
            "sample_rate": carrier.sample_rate,
            "bins": [first, last],
            "bin_frequencies_hz": freqs,
            "mirror_bins": [1, meta.k] if meta.mode == "symmetric" else None,
            "embed_snr_db": embed_snr,
            "complex_carrier": isinstance(carrier, ComplexClip),
            "transform": TRANSFORM_PATH,
            "max_abs_sample": float(np.max(np.abs(carrier.real_part if isinstance(carrier, ComplexClip) else carrier.samples))),
        }

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Literal, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from audio.wav_io import AudioClip, ComplexClip
from watermark.channel import ChannelSpec, apply_channel, derive_seed
from watermark.embedding import EmbedConfig, WatermarkPayload, embed, extract
from watermark.errors import InvalidInputError, UndefinedCorrelationError, UndefinedSNRError

LOG = logging.getLogger(__name__)

SNR_CAP_DB = 200.0


class MetricsReport(BaseModel):
    embed_snr_db: Optional[float]
    payload_max_abs_err: float
    payload_corr: Optional[float] = Field(default=None, ge=-1.0, le=1.0)
    clamped_count: int = Field(ge=0)
    modified_bin_count: int = Field(ge=0)
    mode: Literal["verbatim", "symmetric"]
    k: int
    awgn_snr_db: Optional[float] = None
    gain: Optional[float] = None
    requantize_bits: Optional[int] = None
    seed: int
    spec_index: int
    seed_index: int
    complex_carrier: bool = False


def snr_db(ref: np.ndarray, test: np.ndarray) -> float:
    """10*log10(|ref|^2 / |ref - test|^2), capped at SNR_CAP_DB."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise InvalidInputError(f"Length mismatch: {ref.size} vs {test.size}")
    signal = float(np.sum(ref ** 2))
    if signal == 0.0:
        raise UndefinedSNRError("Reference signal has zero energy")
    error = float(np.sum((ref - test) ** 2))
    if error == 0.0:
        return SNR_CAP_DB
    return min(10.0 * math.log10(signal / error), SNR_CAP_DB)


def correlation(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidInputError(f"Length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise UndefinedCorrelationError("Correlation needs at least two samples")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise UndefinedCorrelationError("Correlation is undefined for a constant vector")
    return float(np.clip(np.corrcoef(a, b)[0, 1], -1.0, 1.0))


def _real_signal(clip) -> np.ndarray:
    return clip.real_part if isinstance(clip, ComplexClip) else clip.samples


def evaluate_pipeline(
    host: AudioClip,
    payload: WatermarkPayload,
    cfg: EmbedConfig,
    specs: list[ChannelSpec],
    seeds: int,
    workers: int = 4,
) -> list[MetricsReport]:
    """Embed once, then attack and extract for every (spec, seed) trial."""
    if not specs or seeds < 1:
        return []

    result = embed(host, payload, cfg)
    watermarked = result.watermarked
    try:
        embed_snr = snr_db(host.samples, _real_signal(watermarked))
    except UndefinedSNRError:
        LOG.warning("Host has zero energy; embed SNR is undefined")
        embed_snr = None

    def run_trial(trial):
        spec_index, seed_index, spec = trial
        trial_spec = spec.model_copy(update={"seed": derive_seed(spec.seed, seed_index)})
        attacked = apply_channel(watermarked, trial_spec)
        recovered, report = extract(attacked, result.meta)

        try:
            corr = correlation(payload.samples, recovered.samples)
        except UndefinedCorrelationError as e:
            LOG.warning(f"Trial ({spec_index}, {seed_index}): {e}")
            corr = None

        awgn = spec.awgn_snr_db
        return MetricsReport(
            embed_snr_db=embed_snr,
            payload_max_abs_err=float(np.max(np.abs(recovered.samples - payload.samples))),
            payload_corr=corr,
            clamped_count=report.clamped_count,
            modified_bin_count=int(result.modified_bins.size),
            mode=cfg.mode,
            k=payload.k,
            awgn_snr_db=None if awgn is None or math.isinf(awgn) else awgn,
            gain=spec.gain,
            requantize_bits=spec.requantize_bits,
            seed=trial_spec.seed,
            spec_index=spec_index,
            seed_index=seed_index,
            complex_carrier=isinstance(watermarked, ComplexClip),
        )

    trials = [(i, s, spec) for i, spec in enumerate(specs) for s in range(seeds)]
    LOG.info(f"Running {len(trials)} trials on {workers} workers")
    # map keeps (spec index, seed index) order whatever the completion order
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        return list(executor.map(run_trial, trials))


def summarize_reports(reports: list[MetricsReport]) -> pd.DataFrame:
    """Per-SNR aggregates; rows without noise are keyed by +inf."""
    columns = ["awgn_snr_db", "trials", "mean_corr", "min_corr", "mean_max_abs_err", "mean_clamped"]
    if not reports:
        return pd.DataFrame(columns=columns)

    df = pd.DataFrame([r.model_dump() for r in reports])
    df["awgn_snr_db"] = df["awgn_snr_db"].astype(float).fillna(np.inf)
    summary = (
        df.groupby("awgn_snr_db")
        .agg(
            trials=("seed", "size"),
            mean_corr=("payload_corr", "mean"),
            min_corr=("payload_corr", "min"),
            mean_max_abs_err=("payload_max_abs_err", "mean"),
            mean_clamped=("clamped_count", "mean"),
        )
        .reset_index()
        .sort_values("awgn_snr_db", ascending=False, ignore_index=True)
    )
    return summary[columns]


def _decimate(x: np.ndarray, fs: int, max_points: int) -> dict:
    # plain stride; the points are for drawing, not for listening
    step = max(1, math.ceil(x.size / max_points))
    idx = np.arange(0, x.size, step)
    return {"sample_rate": fs, "step": step, "time_s": (idx / fs).tolist(), "amplitude": x[idx].tolist()}


def figure_data(
    host: AudioClip,
    watermarked,
    payload: WatermarkPayload,
    recovered: WatermarkPayload,
    bins: int = 50,
    max_points: int = 2000,
) -> dict:
    """Plot-ready series: host and watermarked waveforms, payload histograms before and after.

    Both histograms share one set of edges so they can be overlaid.
    """
    if bins < 1 or max_points < 1:
        raise InvalidInputError(f"bins and max_points must be positive, got {bins} and {max_points}")
    edges = np.histogram_bin_edges(np.concatenate([payload.samples, recovered.samples]), bins=bins)
    payload_counts, _ = np.histogram(payload.samples, bins=edges)
    recovered_counts, _ = np.histogram(recovered.samples, bins=edges)
    return {
        "host": _decimate(host.samples, host.sample_rate, max_points),
        "watermarked": _decimate(_real_signal(watermarked), watermarked.sample_rate, max_points),
        "payload_histogram": {"edges": edges.tolist(), "counts": payload_counts.tolist()},
        "recovered_histogram": {"edges": edges.tolist(), "counts": recovered_counts.tolist()},
    }

"""
Command-line front end.

    python src/cli.py embed   --host h.wav --payload five.wav --out wm.wav [--mode symmetric|verbatim]
    python src/cli.py extract --in wm.wav --out rec.wav [--k N --mode M] [--strict]
    python src/cli.py attack  --in wm.wav --out attacked.wav --awgn-snr-db 30 --seed 7
    python src/cli.py evaluate --host h.wav --payload five.wav --snr-list 60,40,20,10 --seeds 10 --json report.json [--plot-data figs.json]
    python src/cli.py inspect --in wm.wav

Exit codes: 0 ok, 1 embedding failure, 2 usage, 3 capacity, 4 file/format, 5 strict-extraction failure.
"""
import argparse
import json
import logging
import os
import sys

from dotenv import load_dotenv

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from audio.wav_io import sidecar_path
from dsp.denoise import WienerParams
from watermark.channel import ChannelSpec
from watermark.embedding import DEFAULT_EPS, EmbedConfig
from watermark.errors import CapacityError, EmbeddingIntegrityError, ExtractionIntegrityError, FormatError
from watermark_service import WatermarkService

load_dotenv()

LOG = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_FORMAT = 4
EXIT_INTEGRITY = 5

WIENER_FLAGS = ("wiener_frame", "wiener_hop", "wiener_noise_frames", "wiener_floor")


class UsageError(Exception):
    pass


def _configure_logging() -> None:
    level = getattr(logging, os.getenv("WM_LOG", "WARNING").upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(asctime)s - %(levelname)s - %(message)s", stream=sys.stderr)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _snr_list(text: str) -> list[float]:
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--snr-list must be comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("--snr-list is empty")
    return values


def _add_embed_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--host", required=True, help="host WAV (mono, or stereo with --channel)")
    p.add_argument("--payload", required=True, help="payload WAV (mono)")
    p.add_argument("--mode", choices=["symmetric", "verbatim"], default=os.getenv("WM_DEFAULT_MODE", "symmetric"))
    p.add_argument("--channel", type=int, choices=[0, 1], default=None)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--denoise", action="store_true", help="Wiener-filter the payload before embedding")
    p.add_argument("--wiener-frame", type=int)
    p.add_argument("--wiener-hop", type=int)
    p.add_argument("--wiener-noise-frames", type=int)
    p.add_argument("--wiener-floor", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speech-watermark", description="DFT-domain speech watermarking")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="hide a payload clip in a host clip")
    _add_embed_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--encoding", choices=["float64", "pcm16"], default="float64")

    p = sub.add_parser("extract", help="recover the payload from a watermarked clip")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=_positive_int)
    p.add_argument("--mode", choices=["symmetric", "verbatim"])
    p.add_argument("--strict", action="store_true", help="fail on nonpositive bin values instead of clamping")
    p.add_argument("--eps", type=float)
    p.add_argument("--payload-rate", type=_positive_int)
    p.add_argument("--encoding", choices=["float64", "pcm16"], default="float64")

    p = sub.add_parser("attack", help="run a watermarked clip through a simulated channel")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--awgn-snr-db", type=float)
    p.add_argument("--gain", type=float)
    p.add_argument("--requantize-bits", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--encoding", choices=["float64", "pcm16"], default="float64")

    p = sub.add_parser("evaluate", help="embed, attack and extract over an SNR sweep")
    _add_embed_flags(p)
    p.add_argument("--snr-list", type=_snr_list, required=True, help="e.g. inf,60,40,20,10")
    p.add_argument("--seeds", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0, help="base seed for per-trial sub-seeds")
    p.add_argument("--json", dest="json_path", required=True)
    p.add_argument("--plot-data", dest="plot_data_path", help="also write waveform and histogram series for plotting")
    p.add_argument("--workers", type=_positive_int, default=int(os.getenv("WM_WORKERS", "4")))

    p = sub.add_parser("inspect", help="describe a watermarked clip without modifying it")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--host", help="original host, to recompute embed SNR")
    p.add_argument("--channel", type=int, choices=[0, 1], default=None)
    return parser


def _embed_config(args) -> EmbedConfig:
    denoise = None
    if args.denoise:
        overrides = {
            "frame_len": args.wiener_frame,
            "hop": args.wiener_hop,
            "noise_frames": args.wiener_noise_frames,
            "gain_floor": args.wiener_floor,
        }
        denoise = WienerParams(**{k: v for k, v in overrides.items() if v is not None})
    return EmbedConfig(mode=args.mode, eps=args.eps, denoise=denoise)


def _validate(args) -> None:
    """Flag combinations are checked before any file is touched."""
    if args.command in ("embed", "evaluate"):
        given = [f"--{name.replace('_', '-')}" for name in WIENER_FLAGS if getattr(args, name) is not None]
        if given and not args.denoise:
            raise UsageError(f"{', '.join(given)} require --denoise")
    if args.command == "extract":
        side = sidecar_path(args.in_path)
        if not side.is_file() and (args.k is None or args.mode is None):
            raise UsageError(f"sidecar {side} not found; pass both --k and --mode to extract without it")
    if args.command == "attack":
        if args.awgn_snr_db is None and args.gain is None and args.requantize_bits is None:
            raise UsageError("attack needs at least one of --awgn-snr-db, --gain, --requantize-bits")
        if args.seed < 0:
            raise UsageError("--seed must be non-negative")


def _print(report: dict) -> None:
    print(json.dumps(report, indent=2))


def cmd_embed(args) -> int:
    report = WatermarkService.embed_files(
        args.host, args.payload, args.out, _embed_config(args), channel=args.channel, encoding=args.encoding
    )
    _print(report)
    return EXIT_OK


def cmd_extract(args) -> int:
    report = WatermarkService.extract_files(
        args.in_path,
        args.out,
        k=args.k,
        mode=args.mode,
        strict=args.strict,
        eps=args.eps,
        payload_rate=args.payload_rate,
        encoding=args.encoding,
    )
    _print(report)
    return EXIT_OK


def cmd_attack(args) -> int:
    spec = ChannelSpec(
        awgn_snr_db=args.awgn_snr_db,
        gain=args.gain,
        requantize_bits=args.requantize_bits,
        seed=args.seed,
    )
    _print(WatermarkService.attack_files(args.in_path, args.out, spec, encoding=args.encoding))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    reports, summary = WatermarkService.evaluate_files(
        args.host,
        args.payload,
        _embed_config(args),
        args.snr_list,
        args.seeds,
        args.json_path,
        base_seed=args.seed,
        channel=args.channel,
        workers=args.workers,
        plot_data_path=args.plot_data_path,
    )
    print(f"{len(reports)} trials written to {args.json_path}")
    if args.plot_data_path:
        print(f"plot data written to {args.plot_data_path}")
    print(summary.to_string(index=False))
    return EXIT_OK


def cmd_inspect(args) -> int:
    info = WatermarkService.inspect_file(args.in_path, host_path=args.host, channel=args.channel)
    snr = info["embed_snr_db"]
    first, last = info["bins"]
    lines = [
        f"N: {info['n']}",
        f"K: {info['k']}",
        f"mode: {info['mode']}",
        f"sample_rate: {info['sample_rate']} Hz",
        f"modified bins: {first}..{last}"
        + (f" (mirrors 1..{info['k']})" if info["mirror_bins"] else ""),
        f"bin frequencies: {info['bin_frequencies_hz'][0]:.1f} .. {info['bin_frequencies_hz'][-1]:.1f} Hz",
        f"embed_snr_db: {'n/a' if snr is None else f'{snr:.2f}'}",
        f"carrier: {'complex (2-channel float64)' if info['complex_carrier'] else 'real'}",
        f"transform: {info['transform']}",
    ]
    print("\n".join(lines))
    return EXIT_OK


HANDLERS = {
    "embed": cmd_embed,
    "extract": cmd_extract,
    "attack": cmd_attack,
    "evaluate": cmd_evaluate,
    "inspect": cmd_inspect,
}


def run(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return EXIT_USAGE if e.code else EXIT_OK

    try:
        _validate(args)
        return HANDLERS[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as e:
        print(f"capacity error: {e} (k={e.k}, k_max={e.k_max})", file=sys.stderr)
        return EXIT_CAPACITY
    except ExtractionIntegrityError as e:
        print(f"extraction failed: {e}", file=sys.stderr)
        return EXIT_INTEGRITY
    except EmbeddingIntegrityError as e:
        print(f"embedding failed: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except (FormatError, OSError) as e:
        print(f"file error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except ValueError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line dispatch: `mask`, `reconstruct`, `flow`, `bench` and `psnr`."""

import argparse
import logging.config
import sys

from nrfse import __version__, settings
from nrfse.core import views
from nrfse.core.config import Mode


def add_video_options(parser: argparse.ArgumentParser):
    parser.add_argument("--width", type=int)
    parser.add_argument("--height", type=int)
    parser.add_argument("--frames", type=int, help="read only the first N frames")
    parser.add_argument("--format", choices=["gray", "yuv420", "pgm"])


def add_reconstruction_options(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="flat 'key = value' file; flags override it")
    add_video_options(parser)
    parser.add_argument("--mode", choices=[str(mode) for mode in Mode])
    parser.add_argument("--input")
    parser.add_argument("--output")
    parser.add_argument("--mask")
    parser.add_argument("--manifest")
    parser.add_argument("--seeds", help="comma separated mask seeds")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--no-progress", dest="show_progress", action="store_const", const=False)
    parser.add_argument("--block", help="block extent, e.g. 4x4x1")
    parser.add_argument("--border", type=int)
    parser.add_argument("--fft-size", dest="fft_size", help="FFT grid, e.g. 32x32x32")
    parser.add_argument("--rho-hat", dest="rho_hat", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--max-iterations", dest="max_iterations", type=int)
    parser.add_argument("--min-gain", dest="min_gain", type=float)
    parser.add_argument("--temporal-window", dest="temporal_window", type=int)
    parser.add_argument("--flow-levels", dest="flow_levels", type=int)
    parser.add_argument("--flow-window-radius", dest="flow_window_radius", type=int)
    parser.add_argument("--flow-iterations", dest="flow_iterations", type=int)
    parser.add_argument("--flow-poly-n", dest="flow_poly_n", type=int)
    parser.add_argument("--flow-poly-sigma", dest="flow_poly_sigma", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nrfse", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    mask = commands.add_parser("mask", help="generate a non-regular quarter-density mask")
    mask.add_argument("--width", type=int, required=True)
    mask.add_argument("--height", type=int, required=True)
    mask.add_argument("--frames", type=int, required=True)
    mask.add_argument("--seed", type=int, default=settings.DEFAULT_SEEDS[0])
    mask.add_argument("--pattern", choices=["random", "top-left"], default="random")
    mask.add_argument("--output", required=True)
    mask.add_argument("--apply", help="full sequence to sample with the new mask")
    mask.add_argument("--sampled", help="where to write the sampled sequence")
    mask.add_argument("--format", choices=["gray", "yuv420", "pgm"], default="gray")
    mask.set_defaults(handler=views.make_mask)

    reconstruct = commands.add_parser("reconstruct", help="reconstruct a sampled sequence")
    add_reconstruction_options(reconstruct)
    reconstruct.set_defaults(handler=views.reconstruct_sequence)

    flow = commands.add_parser("flow", help="dump adjacent-pair optical flow fields")
    add_reconstruction_options(flow)
    flow.set_defaults(handler=views.dump_flow)

    bench = commands.add_parser("bench", help="PSNR benchmark over sequences, modes and mask seeds")
    add_reconstruction_options(bench)
    bench.add_argument("--sequences", help="comma separated files or synthetic:static / synthetic:translate")
    bench.add_argument("--modes", help="comma separated modes")
    bench.add_argument("--csv")
    bench.set_defaults(handler=views.benchmark)

    psnr = commands.add_parser("psnr", help="PSNR between two sequences")
    psnr.add_argument("--reference", required=True)
    psnr.add_argument("--test", required=True)
    psnr.add_argument("--mask", help="also report PSNR over the loss area of this mask")
    add_video_options(psnr)
    psnr.set_defaults(handler=views.compare_psnr, format="gray")

    return parser


def run_cli(argv=None) -> int:
    """Run one subcommand; returns the process exit status."""
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "mask" and bool(args.apply) != bool(args.sampled):
            parser.error("--apply and --sampled must be given together")
        if args.command == "psnr" and (args.width is None or args.height is None):
            parser.error("psnr needs --width and --height")
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    logging.config.dictConfig(settings.LOGGING)
    return args.handler(args)


def main():
    sys.exit(run_cli())

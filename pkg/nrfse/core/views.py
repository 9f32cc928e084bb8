import functools
import json
import logging
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from nrfse.core.config import ReconstructionConfig, read_config_file
from nrfse.core.evaluation import BenchConfig, psnr, psnr_in_region, run_benchmark
from nrfse.core.exceptions import DimensionMismatch, InvalidParameters, NrfseError
from nrfse.core.models import SamplingMask
from nrfse.core.motion import FlowCache, bilinear_init
from nrfse.core.pipeline import build_manifest, reconstruct
from nrfse.core.sampling import apply_mask, generate_quadrant_mask
from nrfse.core.serializers import read_mask, read_video, write_flow, write_manifest, write_mask, write_video

logger = logging.getLogger(__name__)

CONFIG_KEYS = (
    "mode", "width", "height", "frames", "input", "output", "mask", "manifest", "format",
    "seeds", "workers", "show_progress",
    "block", "border", "fft_size", "rho_hat", "gamma", "delta", "max_iterations", "min_gain", "temporal_window",
    "flow_levels", "flow_window_radius", "flow_iterations", "flow_poly_n", "flow_poly_sigma",
    "sequences", "modes", "csv",
)


def _respond(payload: dict, stream=None):
    print(json.dumps(payload, default=str), file=stream or sys.stdout)


def _error(message: str, code: str) -> int:
    _respond({"error": " ".join(str(message).split()), "code": code}, stream=sys.stderr)
    return 1


def command_view(handler):
    """Turn a handler's exceptions into a one-line JSON error and exit status 1."""

    @functools.wraps(handler)
    def wrapper(args) -> int:
        try:
            return handler(args) or 0
        except NrfseError as exc:
            return _error(str(exc), exc.code)
        except ValidationError as exc:
            problems = "; ".join(f"{'.'.join(map(str, item['loc']))}: {item['msg']}" for item in exc.errors())
            return _error(problems, "E_CONFIG")
        except FileNotFoundError as exc:
            return _error(str(exc), "E_IO")
        except OSError as exc:
            return _error(str(exc), "E_IO")
        except Exception as exc:
            logger.exception("unexpected failure in %s", handler.__name__)
            return _error(str(exc), "E_INTERNAL")

    return wrapper


def flat_values(args) -> dict:
    """Config file values overridden by every flag given on the command line."""
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            values[key] = value
    return values


def _require(config: ReconstructionConfig, *names: str):
    missing = [name for name in names if getattr(config, name) is None]
    if missing:
        raise InvalidParameters(f"missing required settings: {', '.join(missing)}")


def _mask_for(mask: SamplingMask, frames: int) -> SamplingMask:
    """A stored mask covers its recorded frame count; shorter sequences use its leading frames."""
    if mask.frames < frames:
        raise DimensionMismatch(f"mask covers {mask.frames} frames, sequence has {frames}")
    return SamplingMask(mask.bits[:frames])


@command_view
def make_mask(args) -> int:
    """Generate a quadrant mask, optionally sampling a full sequence with it."""
    mask = generate_quadrant_mask(args.width, args.height, args.frames, args.seed, pattern=args.pattern)
    write_mask(args.output, mask)
    payload = {"mask": args.output, "width": mask.width, "height": mask.height, "frames": mask.frames,
               "seed": args.seed, "density": mask.density}
    if args.apply:
        volume = read_video(args.apply, args.width, args.height, args.format, frames=args.frames)
        sampled = apply_mask(volume, _mask_for(mask, volume.frames))
        write_video(args.sampled, sampled, args.format)
        payload["sampled"] = args.sampled
    _respond(payload)


@command_view
def reconstruct_sequence(args) -> int:
    config = ReconstructionConfig.from_flat(flat_values(args))
    _require(config, "input", "mask", "output", "width", "height")
    sequence = read_video(config.input, config.width, config.height, config.video_format, frames=config.frames)
    mask = _mask_for(read_mask(config.mask), sequence.frames)

    stats = {}
    output = reconstruct(sequence, mask, config, stats=stats)
    write_video(config.output, output, config.video_format)

    manifest_path = config.manifest or Path(f"{config.output}.manifest.json")
    manifest = build_manifest(config, {"input": config.input, "mask": config.mask},
                              blocks=stats["blocks"], runtime_s=stats["runtime_s"], frames=sequence.frames)
    write_manifest(manifest_path, manifest)
    _respond({"output": config.output, "manifest": manifest_path, "mode": str(config.mode), **stats})


@command_view
def dump_flow(args) -> int:
    """Write the adjacent-pair flow fields of a sequence (bilinear-filled first when a mask is given)."""
    config = ReconstructionConfig.from_flat(flat_values(args))
    _require(config, "input", "output", "width", "height")
    sequence = read_video(config.input, config.width, config.height, config.video_format, frames=config.frames)
    if config.mask is not None:
        sequence = bilinear_init(sequence, _mask_for(read_mask(config.mask), sequence.frames))

    cache = FlowCache(sequence, config.flow)
    cache.prime(workers=config.workers, show_progress=config.show_progress)
    directory = Path(config.output)
    directory.mkdir(parents=True, exist_ok=True)
    for t in range(sequence.frames - 1):
        write_flow(directory / f"pair_{t:04d}_{t + 1:04d}.flow", cache.pair(t))
    _respond({"output": directory, "pairs": sequence.frames - 1})


@command_view
def benchmark(args) -> int:
    config = BenchConfig.from_flat(flat_values(args))
    report = run_benchmark(config)
    print(report.as_table())
    if config.csv is not None:
        report.to_csv(config.csv)
    _respond({"cells": len(report.cells), "missing": report.missing, "csv": config.csv,
              "runtime_s": round(report.runtime_s, 3)})


@command_view
def compare_psnr(args) -> int:
    reference = read_video(args.reference, args.width, args.height, args.format, frames=args.frames)
    test = read_video(args.test, args.width, args.height, args.format, frames=args.frames)
    payload = {"psnr_db": psnr(reference, test)}
    if args.mask:
        mask = _mask_for(read_mask(args.mask), reference.frames)
        payload["psnr_loss_db"] = psnr_in_region(reference, test, ~mask.bits)
    _respond({key: (value if np.isfinite(value) else "inf") for key, value in payload.items()})

import logging
import time
from pathlib import Path
from typing import Optional

import cv2
import numpy as np
import pydantic

import nrfse
from nrfse.core.config import ReconstructionConfig
from nrfse.core.models import SamplingMask, VideoVolume
from nrfse.core.reconstructors import get_reconstructor
from nrfse.core.serializers import file_digest

logger = logging.getLogger(__name__)


def reconstruct(sequence: VideoVolume, mask: SamplingMask, config: ReconstructionConfig,
                stats: Optional[dict] = None) -> VideoVolume:
    """Reconstruct a sampled sequence with the mode named in ``config``.

    Mask-true pixels pass through unchanged. ``stats``, if given, receives the
    block count and runtime.
    """
    mask.check_matches(sequence)
    reconstructor = get_reconstructor(config)
    start = time.perf_counter()
    result = reconstructor.reconstruct(sequence, mask)
    runtime = time.perf_counter() - start
    blocks = getattr(reconstructor, "blocks_processed", 0)
    logger.info("%s reconstruction of %s: %d blocks in %.2fs", config.mode, sequence, blocks, runtime)
    if stats is not None:
        stats.update(blocks=blocks, runtime_s=runtime)
    return result


def build_manifest(config: ReconstructionConfig, inputs: dict[str, Path], **extra) -> dict:
    """Everything needed to repeat a run: parameters, seeds, versions and input digests."""
    return {
        "mode": str(config.mode),
        "parameters": {key: value for key, value in config.to_flat().items() if key != "mode"},
        "seeds": list(config.seeds),
        "versions": {
            "nrfse": nrfse.__version__,
            "numpy": np.__version__,
            "opencv": cv2.__version__,
            "pydantic": pydantic.VERSION,
        },
        "inputs": {name: {"path": str(path), "sha256": file_digest(path)} for name, path in inputs.items()},
        **extra,
    }

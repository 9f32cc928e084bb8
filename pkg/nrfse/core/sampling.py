"""Non-regular quarter-density sensor masks and their application to a sequence."""

import logging
from typing import Annotated, Literal

import numpy as np
from annotated_types import Ge, Lt

from nrfse.core.exceptions import DimensionMismatch, InvalidParameters
from nrfse.core.models import SamplingMask, VideoVolume

logger = logging.getLogger(__name__)

MaskSeed = Annotated[int, Ge(0), Lt(2**64)]

MaskPattern = Literal["random", "top-left"]


def generate_quadrant_mask(width: int, height: int, frames: int, seed: MaskSeed,
                           pattern: MaskPattern = "random") -> SamplingMask:
    """Pick one of the four quadrants of every 2x2 block and repeat the pattern over all frames.

    Quadrants are drawn i.i.d. uniform from a Philox (counter-based) generator,
    so identical seed and dimensions always give the identical mask. The
    ``top-left`` pattern is a regular layout kept for debugging only.
    """
    if width < 2 or height < 2 or frames < 1:
        raise InvalidParameters(f"mask needs width, height >= 2 and frames >= 1, got {width}x{height}x{frames}")
    if width % 2 or height % 2:
        raise InvalidParameters(f"mask width and height must be even, got {width}x{height}")
    if not 0 <= seed < 2**64:
        raise InvalidParameters(f"mask seed must be a 64-bit unsigned integer, got {seed}")

    blocks_y, blocks_x = height // 2, width // 2
    if pattern == "random":
        rng = np.random.Generator(np.random.Philox(seed))
        quadrants = rng.integers(0, 4, size=(blocks_y, blocks_x))
    elif pattern == "top-left":
        quadrants = np.zeros((blocks_y, blocks_x), dtype=np.int64)
    else:
        raise InvalidParameters(f"unknown mask pattern {pattern!r}")

    frame_bits = np.zeros((blocks_y, 2, blocks_x, 2), dtype=bool)
    by, bx = np.indices((blocks_y, blocks_x))
    frame_bits[by, quadrants // 2, bx, quadrants % 2] = True
    frame_bits = frame_bits.reshape(height, width)

    logger.debug("generated %s mask %dx%dx%d (seed %d)", pattern, width, height, frames, seed)
    return SamplingMask.from_frame(frame_bits, frames)


def apply_mask(volume: VideoVolume, mask: SamplingMask) -> VideoVolume:
    """s_nr = s * b. Zeros mark missing pixels, but only the mask says which pixels are missing."""
    if mask.shape != volume.shape:
        raise DimensionMismatch(f"mask shape {mask.shape} does not match volume shape {volume.shape}")
    return VideoVolume(np.where(mask.bits, volume.samples, 0.0))

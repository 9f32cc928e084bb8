from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import TYPE_CHECKING, Optional

import numpy as np

from nrfse.core.exceptions import DimensionMismatch, OutOfBounds

if TYPE_CHECKING:
    from nrfse.core.fse import FseParams

# Arrays are indexed [t, y, x]; coordinates passed around as tuples are (x, y, t).


class AreaLabel(IntEnum):
    """Role of a voxel inside an extrapolation window."""

    OUTSIDE = 0
    SUPPORT = 1
    LOSS = 2
    RECONSTRUCTED = 3


@dataclass
class VideoVolume:
    """A luma sequence s[x,y,t], stored as a float64 array of shape (frames, height, width)."""

    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 3 or min(samples.shape) < 1:
            raise DimensionMismatch(f"a video volume needs a non-empty 3D array, got shape {samples.shape}")
        self.samples = samples

    @classmethod
    def zeros(cls, width: int, height: int, frames: int) -> "VideoVolume":
        return cls(np.zeros((frames, height, width)))

    @property
    def width(self) -> int:
        return self.samples.shape[2]

    @property
    def height(self) -> int:
        return self.samples.shape[1]

    @property
    def frames(self) -> int:
        return self.samples.shape[0]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.samples.shape

    def frame(self, t: int) -> np.ndarray:
        return self.samples[t]

    def copy(self) -> "VideoVolume":
        return VideoVolume(self.samples.copy())

    def clamped(self) -> "VideoVolume":
        return VideoVolume(np.clip(self.samples, 0.0, 255.0))

    def to_uint8(self) -> np.ndarray:
        return np.clip(np.rint(self.samples), 0, 255).astype(np.uint8)

    def __str__(self):
        return f"VideoVolume({self.width}x{self.height}x{self.frames})"


@dataclass
class SamplingMask:
    """Binary sensor mask b[x,y,t]; True marks a pixel the sensor actually read out."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 3 or min(bits.shape) < 1:
            raise DimensionMismatch(f"a sampling mask needs a non-empty 3D array, got shape {bits.shape}")
        self.bits = bits

    @classmethod
    def from_frame(cls, frame_bits: np.ndarray, frames: int) -> "SamplingMask":
        frame_bits = np.asarray(frame_bits, dtype=bool)
        return cls(np.repeat(frame_bits[np.newaxis], frames, axis=0))

    @property
    def width(self) -> int:
        return self.bits.shape[2]

    @property
    def height(self) -> int:
        return self.bits.shape[1]

    @property
    def frames(self) -> int:
        return self.bits.shape[0]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.bits.shape

    @property
    def density(self) -> float:
        return float(self.bits.mean())

    def is_temporally_constant(self) -> bool:
        return bool(np.all(self.bits == self.bits[0]))

    def is_quadrant_mask(self) -> bool:
        """True when every disjoint 2x2 block of every frame holds exactly one sample."""
        if self.width % 2 or self.height % 2:
            return False
        counts = self.bits.reshape(self.frames, self.height // 2, 2, self.width // 2, 2).sum(axis=(2, 4))
        return bool(np.all(counts == 1))

    def check_matches(self, volume: VideoVolume):
        if self.shape != volume.shape:
            raise DimensionMismatch(f"mask shape {self.shape} does not match volume shape {volume.shape}")

    def __str__(self):
        return f"SamplingMask({self.width}x{self.height}x{self.frames}, density={self.density:.4f})"


@dataclass
class ExtrapolationWindow:
    """The extrapolation volume L = A u B u R around one loss block.

    ``values`` and ``labels`` have shape (P, N, M). ``block_offset`` is the
    (m, n, p) position of the loss block inside the window and ``block_extent``
    its (M_b, N_b, P_b) size.
    """

    origin: tuple[int, int, int]
    values: np.ndarray
    labels: np.ndarray
    block_offset: tuple[int, int, int]
    block_extent: tuple[int, int, int]

    @property
    def dims(self) -> tuple[int, int, int]:
        p, n, m = self.values.shape
        return m, n, p

    def count(self, label: AreaLabel) -> int:
        return int(np.count_nonzero(self.labels == label))

    def block_slices(self) -> tuple[slice, slice, slice]:
        m0, n0, p0 = self.block_offset
        mb, nb, pb = self.block_extent
        return slice(p0, p0 + pb), slice(n0, n0 + nb), slice(m0, m0 + mb)

    def __str__(self):
        return f"ExtrapolationWindow(origin={self.origin}, dims={self.dims})"


def _clip_axis(start: int, size: int, limit: int) -> tuple[slice, slice]:
    """Volume and window slices for the in-bounds part of [start, start + size)."""
    lo = max(start, 0)
    hi = min(start + size, limit)
    if hi <= lo:
        return slice(0, 0), slice(0, 0)
    return slice(lo, hi), slice(lo - start, hi - start)


def block_extent_at(shape: tuple[int, int, int], block_origin: tuple[int, int, int],
                    block: tuple[int, int, int]) -> tuple[int, int, int]:
    """Block size at ``block_origin``, shrunk where a partial block meets the volume rim."""
    frames, height, width = shape
    x, y, t = block_origin
    return min(block[0], width - x), min(block[1], height - y), min(block[2], frames - t)


def window_geometry(block_origin: tuple[int, int, int], block_extent: tuple[int, int, int],
                    border: int, temporal_window: int) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
    """Return the window origin (x0, y0, t0) and dims (M, N, P) centred on a block.

    A rim block that lost frames can leave an odd number of spare slices; the
    extra slice then goes after the block.
    """
    x, y, t = block_origin
    mb, nb, pb = block_extent
    if temporal_window < pb:
        raise OutOfBounds(f"temporal window {temporal_window} cannot hold a block of depth {pb}")
    depth_border = (temporal_window - pb) // 2
    origin = (x - border, y - border, t - depth_border)
    dims = (mb + 2 * border, nb + 2 * border, temporal_window)
    return origin, dims


def extract_window(volume: VideoVolume, mask: SamplingMask, recon_flags: np.ndarray,
                   block_origin: tuple[int, int, int], params: "FseParams",
                   block_extent: Optional[tuple[int, int, int]] = None) -> ExtrapolationWindow:
    """Cut the extrapolation window around a loss block and label every voxel.

    Mask-true voxels are support (A), reconstructed loss voxels are R, the
    remaining loss voxels are B and voxels beyond the sequence are Outside.
    """
    mask.check_matches(volume)
    if recon_flags.shape != volume.shape:
        raise DimensionMismatch(f"recon_flags shape {recon_flags.shape} does not match volume shape {volume.shape}")
    x, y, t = block_origin
    if not (0 <= x < volume.width and 0 <= y < volume.height and 0 <= t < volume.frames):
        raise OutOfBounds(f"block origin {block_origin} lies outside {volume}")
    if block_extent is None:
        block_extent = block_extent_at(volume.shape, block_origin, params.block)

    (x0, y0, t0), (m, n, p) = window_geometry(block_origin, block_extent, params.border, params.temporal_window)
    values = np.zeros((p, n, m))
    labels = np.full((p, n, m), AreaLabel.OUTSIDE, dtype=np.int8)

    vt, wt = _clip_axis(t0, p, volume.frames)
    vy, wy = _clip_axis(y0, n, volume.height)
    vx, wx = _clip_axis(x0, m, volume.width)

    bits = mask.bits[vt, vy, vx]
    flags = recon_flags[vt, vy, vx]
    inner = np.where(bits, AreaLabel.SUPPORT, np.where(flags, AreaLabel.RECONSTRUCTED, AreaLabel.LOSS))
    labels[wt, wy, wx] = inner
    values[wt, wy, wx] = volume.samples[vt, vy, vx]
    # Loss voxels carry no information; keep them finite and inert.
    values[labels == AreaLabel.LOSS] = 0.0

    offset = (x - x0, y - y0, t - t0)
    return ExtrapolationWindow(origin=(x0, y0, t0), values=values, labels=labels,
                               block_offset=offset, block_extent=tuple(block_extent))


def insert_block(volume: VideoVolume, window: ExtrapolationWindow, model: np.ndarray,
                 block_extent: tuple[int, int, int], recon_flags: np.ndarray) -> tuple[VideoVolume, np.ndarray]:
    """Write the model into the loss voxels of the central block, in place.

    Only B voxels inside the block extent change; values are clamped to
    [0, 255] and the matching recon_flags are raised.
    """
    model = np.asarray(model, dtype=np.float64)
    if model.shape != window.values.shape:
        raise DimensionMismatch(f"model shape {model.shape} does not match window shape {window.values.shape}")
    if tuple(block_extent) != tuple(window.block_extent):
        raise DimensionMismatch(f"block extent {block_extent} does not match window block {window.block_extent}")

    sp, sn, sm = window.block_slices()
    block_labels = window.labels[sp, sn, sm]
    write = block_labels == AreaLabel.LOSS

    x0, y0, t0 = window.origin
    m0, n0, p0 = window.block_offset
    mb, nb, pb = window.block_extent
    target = (slice(t0 + p0, t0 + p0 + pb), slice(y0 + n0, y0 + n0 + nb), slice(x0 + m0, x0 + m0 + mb))

    block_values = volume.samples[target]
    block_values[write] = np.clip(model[sp, sn, sm][write], 0.0, 255.0)
    recon_flags[target] |= write
    return volume, recon_flags

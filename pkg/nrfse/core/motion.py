"""Motion data for the motion compensated weighting.

The sampled sequence is first filled by a bilinear-style interpolation so that
dense optical flow (Farneback, via OpenCV) can be estimated on whole frames.
Flow between adjacent frames is cached and accumulated outward from the centre
frame of a window, then averaged over the window footprint slice by slice.
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import cv2
import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import ndimage
from tqdm import tqdm

from nrfse import settings
from nrfse.core.exceptions import DimensionMismatch, EmptySupport, InvalidParameters, OutOfBounds
from nrfse.core.models import SamplingMask, VideoVolume
from nrfse.core.weighting import SliceMotion

logger = logging.getLogger(__name__)


class FlowParams(BaseModel):
    """Farneback settings. ``window_radius`` r gives an averaging window of 2r + 1 pixels."""

    model_config = ConfigDict(frozen=True)

    levels: int = Field(settings.DEFAULT_FLOW_LEVELS, gt=0)
    window_radius: int = Field(settings.DEFAULT_FLOW_WINDOW_RADIUS, gt=0)
    iterations_per_level: int = Field(settings.DEFAULT_FLOW_ITERATIONS, gt=0)
    poly_n: int = Field(settings.DEFAULT_FLOW_POLY_N, gt=0)
    poly_sigma: float = Field(settings.DEFAULT_FLOW_POLY_SIGMA, gt=0.0)
    pyr_scale: float = Field(settings.DEFAULT_FLOW_PYR_SCALE, gt=0.0, lt=1.0)


@dataclass
class VectorField:
    """Per-pixel displacement (vx, vy) from a source frame to a reference frame."""

    vx: np.ndarray
    vy: np.ndarray

    def __post_init__(self):
        self.vx = np.asarray(self.vx, dtype=np.float64)
        self.vy = np.asarray(self.vy, dtype=np.float64)
        if self.vx.shape != self.vy.shape or self.vx.ndim != 2:
            raise DimensionMismatch(f"vx {self.vx.shape} and vy {self.vy.shape} must be equal 2D fields")

    @property
    def width(self) -> int:
        return self.vx.shape[1]

    @property
    def height(self) -> int:
        return self.vx.shape[0]


def _nearest_available(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column of the nearest available pixel to the left (or -1) and right (or width) in each row."""
    height, width = bits.shape
    columns = np.broadcast_to(np.arange(width), (height, width))
    left = np.maximum.accumulate(np.where(bits, columns, -1), axis=1)
    right = np.minimum.accumulate(np.where(bits, columns, width)[:, ::-1], axis=1)[:, ::-1]
    return left, right


def _fill_frame(frame: np.ndarray, bits: np.ndarray) -> np.ndarray:
    height, width = bits.shape
    ys, xs = np.indices((height, width))
    left, right = _nearest_available(bits)
    up, down = (edge.T for edge in _nearest_available(bits.T))

    candidates = (
        (left >= 0, xs - left, frame[ys, np.clip(left, 0, width - 1)]),
        (right < width, right - xs, frame[ys, np.clip(right, 0, width - 1)]),
        (up >= 0, ys - up, frame[np.clip(up, 0, height - 1), xs]),
        (down < height, down - ys, frame[np.clip(down, 0, height - 1), xs]),
    )
    total = np.zeros((height, width))
    weight_sum = np.zeros((height, width))
    for available, distance, value in candidates:
        weight = np.where(available, 1.0 / np.maximum(distance, 1), 0.0)
        total += weight * value
        weight_sum += weight

    filled = np.where(weight_sum > 0, total / np.where(weight_sum > 0, weight_sum, 1.0), 0.0)
    stranded = ~bits & (weight_sum == 0)
    if np.any(stranded):
        # Neither the row nor the column holds a sample: take the nearest one in the frame.
        iy, ix = ndimage.distance_transform_edt(~bits, return_distances=False, return_indices=True)
        filled[stranded] = frame[iy[stranded], ix[stranded]]
    return np.where(bits, frame, filled)


def bilinear_init(sampled: VideoVolume, mask: SamplingMask) -> VideoVolume:
    """Fill every missing pixel from the nearest samples left, right, above and below.

    Weights are inverse distances normalised to one, which reduces to linear
    interpolation along each axis. Available pixels are copied unchanged.
    """
    mask.check_matches(sampled)
    frames = []
    for t in range(sampled.frames):
        bits = mask.bits[t]
        if not bits.any():
            raise EmptySupport(f"frame {t} has no available samples")
        frames.append(_fill_frame(sampled.samples[t], bits))
    return VideoVolume(np.stack(frames))


def estimate_flow(frame_a: np.ndarray, frame_b: np.ndarray, params: FlowParams) -> VectorField:
    """Dense Farneback flow: content at (x, y) in frame_a is found at (x + vx, y + vy) in frame_b."""
    frame_a = np.asarray(frame_a, dtype=np.float32)
    frame_b = np.asarray(frame_b, dtype=np.float32)
    if frame_a.shape != frame_b.shape or frame_a.ndim != 2:
        raise DimensionMismatch(f"flow needs two equal 2D frames, got {frame_a.shape} and {frame_b.shape}")
    if min(frame_a.shape) < params.poly_n:
        raise DimensionMismatch(f"frames {frame_a.shape} are smaller than the polynomial neighbourhood {params.poly_n}")

    flow = cv2.calcOpticalFlowFarneback(
        frame_a,
        frame_b,
        None,
        params.pyr_scale,
        params.levels,
        2 * params.window_radius + 1,
        params.iterations_per_level,
        params.poly_n,
        params.poly_sigma,
        0,
    )
    return VectorField(flow[..., 0], flow[..., 1])


def clip_rect(window_rect: tuple[int, int, int, int], width: int, height: int) -> tuple[int, int, int, int]:
    """Intersect (x0, y0, M, N) with the frame."""
    x0, y0, m, n = window_rect
    x1, y1 = min(x0 + m, width), min(y0 + n, height)
    x0, y0 = max(x0, 0), max(y0, 0)
    return x0, y0, max(x1 - x0, 0), max(y1 - y0, 0)


def slice_average(field: VectorField, window_rect: tuple[int, int, int, int]) -> tuple[float, float]:
    """Mean vector of the M x N rectangle at (x0, y0)."""
    x0, y0, m, n = window_rect
    if m <= 0 or n <= 0:
        raise InvalidParameters(f"cannot average over an empty rectangle {window_rect}")
    if x0 < 0 or y0 < 0 or x0 + m > field.width or y0 + n > field.height:
        raise OutOfBounds(f"rectangle {window_rect} exceeds the {field.width}x{field.height} field")
    region = (slice(y0, y0 + n), slice(x0, x0 + m))
    return float(field.vx[region].mean()), float(field.vy[region].mean())


class FlowCache:
    """Adjacent-pair flow fields of an interpolated sequence, each computed once."""

    def __init__(self, interpolated: VideoVolume, params: FlowParams):
        self.interpolated = interpolated
        self.params = params
        self._fields: dict[int, VectorField] = {}
        self._lock = threading.Lock()

    def pair(self, t: int) -> VectorField:
        """Flow from frame t to frame t + 1."""
        if not 0 <= t < self.interpolated.frames - 1:
            raise OutOfBounds(f"no frame pair ({t}, {t + 1}) in {self.interpolated}")
        with self._lock:
            cached = self._fields.get(t)
        if cached is not None:
            return cached
        field = estimate_flow(self.interpolated.frame(t), self.interpolated.frame(t + 1), self.params)
        with self._lock:
            return self._fields.setdefault(t, field)

    def prime(self, workers: int = 1, show_progress: bool = False):
        pairs = range(self.interpolated.frames - 1)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(tqdm(pool.map(self.pair, pairs), total=len(pairs), desc="flow", disable=not show_progress))
        else:
            for t in tqdm(pairs, desc="flow", disable=not show_progress):
                self.pair(t)
        logger.info("estimated flow for %d frame pairs", len(pairs))

    def __len__(self):
        return len(self._fields)


def window_motion(interpolated: VideoVolume, center_frame: int, window_rect: tuple[int, int, int, int],
                  slices: int, params: FlowParams, cache: Optional[FlowCache] = None) -> SliceMotion:
    """Averaged displacement of the centre frame's window content in each slice of the window.

    Adjacent-pair averages are summed outward from the centre, so slice p
    holds where the centre content sits in frame ``center_frame + p - slices // 2``.
    Slices outside the sequence keep (0, 0).
    """
    if slices < 1 or slices % 2 == 0:
        raise InvalidParameters(f"the temporal window must be odd, got {slices}")
    if not 0 <= center_frame < interpolated.frames:
        raise OutOfBounds(f"centre frame {center_frame} outside {interpolated}")
    if cache is None:
        cache = FlowCache(interpolated, params)

    rect = clip_rect(window_rect, interpolated.width, interpolated.height)
    half = slices // 2
    vx = np.zeros(slices)
    vy = np.zeros(slices)

    for p in range(half + 1, slices):
        t = center_frame + p - half
        if t >= interpolated.frames:
            break
        ax, ay = slice_average(cache.pair(t - 1), rect)
        vx[p], vy[p] = vx[p - 1] + ax, vy[p - 1] + ay

    for p in range(half - 1, -1, -1):
        t = center_frame + p - half
        if t < 0:
            break
        ax, ay = slice_average(cache.pair(t), rect)
        vx[p], vy[p] = vx[p + 1] - ax, vy[p + 1] - ay

    return SliceMotion(vx, vy)

"""Synthetic test sequences with known motion."""

import numpy as np
from scipy import ndimage

from nrfse.core.models import VideoVolume


def texture(width: int, height: int, seed: int = 0, sigma: float = 1.5) -> np.ndarray:
    """Smoothed white noise stretched to [16, 235]."""
    rng = np.random.default_rng(seed)
    field = ndimage.gaussian_filter(rng.random((height, width)), sigma, mode="wrap")
    field -= field.min()
    field /= max(field.max(), 1e-12)
    return 16.0 + 219.0 * field


def translating_texture(width: int, height: int, frames: int, velocity: tuple[int, int] = (2, 0),
                        seed: int = 0, sigma: float = 1.5) -> VideoVolume:
    """A texture moving by an integer ``velocity`` (vx, vy) pixels per frame.

    Content at (x, y) in frame 0 sits at (x + vx * t, y + vy * t) in frame t.
    """
    vx, vy = velocity
    pad_x, pad_y = abs(vx) * frames, abs(vy) * frames
    canvas = texture(width + 2 * pad_x, height + 2 * pad_y, seed=seed, sigma=sigma)
    planes = []
    for t in range(frames):
        x0, y0 = pad_x - vx * t, pad_y - vy * t
        planes.append(canvas[y0:y0 + height, x0:x0 + width])
    return VideoVolume(np.stack(planes))


def static_texture(width: int, height: int, frames: int, seed: int = 0, sigma: float = 1.5) -> VideoVolume:
    return translating_texture(width, height, frames, velocity=(0, 0), seed=seed, sigma=sigma)


SYNTHETIC_SEQUENCES = {
    "synthetic:static": lambda width, height, frames: static_texture(width, height, frames),
    "synthetic:translate": lambda width, height, frames: translating_texture(width, height, frames, (2, 0)),
}

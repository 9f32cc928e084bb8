"""Spatio-temporal weighting functions for the extrapolation window.

The static weight decays with the distance from the window centre. The motion
compensated weight moves the spatial centre of every temporal slice by the
averaged motion of that slice, so the maximum stays on the same content.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from nrfse import settings
from nrfse.core.exceptions import DimensionMismatch, InvalidParameters
from nrfse.core.models import AreaLabel, ExtrapolationWindow


class WeightParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    rho_hat: float = Field(settings.DEFAULT_RHO_HAT, gt=0.0, lt=1.0)
    delta: float = Field(settings.DEFAULT_DELTA, ge=0.0, le=1.0)
    dims: tuple[int, int, int] = (32, 32, 1)

    def center(self) -> tuple[float, float, float]:
        m, n, p = self.dims
        return (m - 1) / 2, (n - 1) / 2, (p - 1) / 2


@dataclass(frozen=True)
class SliceMotion:
    """Averaged motion (vx[p], vy[p]) of every window slice relative to the centre slice."""

    vx: np.ndarray
    vy: np.ndarray

    def __post_init__(self):
        vx = np.asarray(self.vx, dtype=np.float64).reshape(-1)
        vy = np.asarray(self.vy, dtype=np.float64).reshape(-1)
        if vx.shape != vy.shape:
            raise DimensionMismatch(f"vx has {vx.size} slices but vy has {vy.size}")
        if not (np.all(np.isfinite(vx)) and np.all(np.isfinite(vy))):
            raise InvalidParameters("slice motion must be finite")
        object.__setattr__(self, "vx", vx)
        object.__setattr__(self, "vy", vy)

    @classmethod
    def zeros(cls, slices: int) -> "SliceMotion":
        return cls(np.zeros(slices), np.zeros(slices))

    def __len__(self):
        return self.vx.size


@dataclass
class WeightVolume:
    w: np.ndarray


def rho_static(m: int, n: int, p: int, params: WeightParams) -> float:
    cm, cn, cp = params.center()
    distance = math.sqrt((m - cm) ** 2 + (n - cn) ** 2 + (p - cp) ** 2)
    return params.rho_hat ** distance


def rho_mc(m: int, n: int, p: int, motion: SliceMotion, params: WeightParams) -> float:
    if len(motion) != params.dims[2]:
        raise DimensionMismatch(f"motion has {len(motion)} slices, window has {params.dims[2]}")
    cm, cn, cp = params.center()
    distance = math.sqrt((m - cm - motion.vx[p]) ** 2 + (n - cn - motion.vy[p]) ** 2 + (p - cp) ** 2)
    return params.rho_hat ** distance


def rho_volume(params: WeightParams, motion: Optional[SliceMotion] = None) -> np.ndarray:
    """Evaluate rho (or the motion shifted rho) on the whole (P, N, M) grid."""
    m_dim, n_dim, p_dim = params.dims
    if motion is None:
        motion = SliceMotion.zeros(p_dim)
    if len(motion) != p_dim:
        raise DimensionMismatch(f"motion has {len(motion)} slices, window has {p_dim}")
    cm, cn, cp = params.center()
    m = np.arange(m_dim, dtype=np.float64)[np.newaxis, np.newaxis, :]
    n = np.arange(n_dim, dtype=np.float64)[np.newaxis, :, np.newaxis]
    p = np.arange(p_dim, dtype=np.float64)[:, np.newaxis, np.newaxis]
    vx = motion.vx[:, np.newaxis, np.newaxis]
    vy = motion.vy[:, np.newaxis, np.newaxis]
    # The temporal term is never shifted.
    distance = np.sqrt((m - cm - vx) ** 2 + (n - cn - vy) ** 2 + (p - cp) ** 2)
    return params.rho_hat ** distance


def build_weight_volume(window: ExtrapolationWindow, motion: Optional[SliceMotion],
                        params: WeightParams) -> WeightVolume:
    """w = rho on A, delta * rho on R and 0 on B and Outside.

    Without motion this is the static weighting; with motion every slice uses
    the shifted rho.
    """
    params = params.model_copy(update={"dims": window.dims})
    if motion is not None and len(motion) != window.dims[2]:
        raise DimensionMismatch(f"motion has {len(motion)} slices, window has {window.dims[2]}")
    rho = rho_volume(params, motion)
    w = np.zeros_like(rho)
    support = window.labels == AreaLabel.SUPPORT
    reconstructed = window.labels == AreaLabel.RECONSTRUCTED
    w[support] = rho[support]
    w[reconstructed] = params.delta * rho[reconstructed]
    return WeightVolume(w)

"""Frequency selective extrapolation (FSE) of a single window.

The model g is a sum of weighted DFT basis functions on the FFT grid. Each
iteration selects the basis function with the largest weighted projection
energy of the residual and adds a damped share of it. Residual bookkeeping
happens entirely in the frequency domain: the weighted residual spectrum
R_w = DFT(w * (f - g)) is updated by subtracting shifted copies of the weight
spectrum W = DFT(w). One forward transform of w*f and of w, one inverse
transform of the coefficients.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from nrfse import settings
from nrfse.core.exceptions import DimensionMismatch, EmptySupport, InvalidParameters
from nrfse.core.models import ExtrapolationWindow
from nrfse.core.weighting import WeightParams, WeightVolume

logger = logging.getLogger(__name__)


def parse_triple(value):
    """Accept (a, b, c), [a, b, c] or the strings "a x b x c" / "a,b,c"."""
    if isinstance(value, str):
        parts = value.lower().replace("x", ",").replace("×", ",").split(",")
        value = [int(part) for part in parts if part.strip()]
    return value


class FseParams(BaseModel):
    """Block, window, transform and iteration settings shared by all FSE modes.

    ``block`` and ``fft_size`` are given as (x, y, t) extents.
    """

    model_config = ConfigDict(frozen=True)

    block: tuple[int, int, int] = settings.DEFAULT_BLOCK
    border: int = Field(settings.DEFAULT_BORDER, ge=0)
    fft_size: tuple[int, int, int] = settings.DEFAULT_FFT_SIZE
    rho_hat: float = Field(settings.DEFAULT_RHO_HAT, gt=0.0, lt=1.0)
    gamma: float = Field(settings.DEFAULT_GAMMA, gt=0.0, le=1.0)
    delta: float = Field(settings.DEFAULT_DELTA, ge=0.0, le=1.0)
    max_iterations: int = Field(settings.DEFAULT_MAX_ITERATIONS, ge=0)
    min_gain: float = Field(settings.DEFAULT_MIN_GAIN, ge=0.0)
    temporal_window: int = Field(settings.DEFAULT_TEMPORAL_WINDOW, ge=1)

    @field_validator("block", "fft_size", mode="before")
    @classmethod
    def split_triples(cls, value):
        return parse_triple(value)

    @model_validator(mode="after")
    def check_sizes(self):
        if min(self.block) < 1 or min(self.fft_size) < 1:
            raise ValueError("block and fft_size entries must be positive")
        if self.temporal_window % 2 == 0:
            raise ValueError(f"temporal_window must be odd, got {self.temporal_window}")
        if self.block[2] > self.temporal_window or (self.temporal_window - self.block[2]) % 2:
            raise ValueError("the block depth must fit centred into the temporal window")
        for axis in range(2):
            if self.block[axis] + 2 * self.border > self.fft_size[axis]:
                raise ValueError(
                    f"block {self.block[axis]} + 2 * border {self.border} exceeds fft size {self.fft_size[axis]}"
                )
        if self.temporal_window > self.fft_size[2]:
            raise ValueError(f"temporal window {self.temporal_window} exceeds temporal fft size {self.fft_size[2]}")
        return self

    @property
    def window_dims(self) -> tuple[int, int, int]:
        return (self.block[0] + 2 * self.border, self.block[1] + 2 * self.border, self.temporal_window)

    def weight_params(self) -> WeightParams:
        return WeightParams(rho_hat=self.rho_hat, delta=self.delta, dims=self.window_dims)


def transform_shape(params: FseParams, dims: tuple[int, int, int]) -> tuple[int, int, int]:
    """FFT grid in array order (Pf, Nf, Mf) for a window of dims (M, N, P)."""
    m, n, p = dims
    mf, nf, pf = params.fft_size
    if m > mf or n > nf or p > pf:
        raise DimensionMismatch(f"window {dims} does not fit into fft grid {params.fft_size}")
    # A single slice has no temporal frequencies to resolve.
    if p == 1:
        pf = 1
    return pf, nf, mf


def _pad(values: np.ndarray, shape: tuple[int, int, int]) -> np.ndarray:
    padded = np.zeros(shape, dtype=values.dtype)
    padded[: values.shape[0], : values.shape[1], : values.shape[2]] = values
    return padded


def conjugate_index(k: tuple[int, int, int], shape: tuple[int, int, int]) -> tuple[int, int, int]:
    return tuple((-ki) % size for ki, size in zip(k, shape))


def spectral_energy(spectrum: np.ndarray) -> np.ndarray:
    """|R(k)|^2 in a single pass over the interleaved real and imaginary parts."""
    parts = np.ascontiguousarray(spectrum, dtype=np.complex128).view(np.float64).reshape(*spectrum.shape, 2)
    return np.einsum("...i,...i->...", parts, parts)


def lexicographic_argmax(energy: np.ndarray) -> tuple[int, int, int]:
    """Array index of the maximum; ties go to the smallest (w, u, v) frequency index."""
    # Array axes are (w, v, u); view them as (w, u, v) so argmax's first hit is the lexicographic minimum.
    ordered = energy.transpose(0, 2, 1)
    w, u, v = np.unravel_index(int(np.argmax(ordered)), ordered.shape)
    return int(w), int(v), int(u)


@dataclass
class ModelSpectrum:
    """Expansion coefficients c[k] of the model over the FFT grid (array order)."""

    coefficients: np.ndarray

    def to_spatial(self, dims: tuple[int, int, int]) -> np.ndarray:
        m, n, p = dims
        spatial = np.fft.ifftn(self.coefficients) * self.coefficients.size
        return spatial[:p, :n, :m]


@dataclass
class SpectrumState:
    """Working state of one model generation.

    ``residual`` is either the full weighted residual spectrum or its
    non-negative half along the last axis (as returned by ``rfftn``); the
    other half follows from conjugate symmetry. ``weight_spectrum`` is
    always the full spectrum W.
    """

    model: ModelSpectrum
    residual: np.ndarray
    weight_spectrum: np.ndarray
    _tiled_weight: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        # W repeated twice along every axis: any cyclic shift of W is a plain slice.
        self._tiled_weight = np.tile(self.weight_spectrum, (2, 2, 2))

    @property
    def weight_sum(self) -> float:
        return float(self.weight_spectrum[0, 0, 0].real)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.weight_spectrum.shape

    def residual_at(self, k: tuple[int, int, int]) -> complex:
        if k[2] < self.residual.shape[2]:
            return self.residual[k]
        return np.conj(self.residual[conjugate_index(k, self.shape)])

    def shifted_weight(self, k: tuple[int, int, int]) -> np.ndarray:
        """View of W(j - k) over the stored residual bins j."""
        starts = [size - ki for ki, size in zip(k, self.shape)]
        return self._tiled_weight[tuple(slice(s, s + n) for s, n in zip(starts, self.residual.shape))]


def select_basis(weighted_residual_spectrum: np.ndarray, fft_width: Optional[int] = None) -> tuple[int, int, int]:
    """Frequency index (array order) of the basis function with the largest weighted projection energy.

    A bin and its conjugate partner form one real basis pair and are reported
    by whichever of the two has the smaller (w, u, v) index; exact ties
    between pairs go to the smallest index as well. ``fft_width`` is the full
    length of the last axis when only half of the spectrum is passed.
    """
    energy = spectral_energy(weighted_residual_spectrum)
    peak = energy.max()
    if peak <= 0.0:
        return 0, 0, 0
    shape = np.array((*energy.shape[:2], fft_width or energy.shape[2]))
    candidates = np.array(np.unravel_index(np.flatnonzero(energy == peak), energy.shape))
    both = np.concatenate([candidates, (-candidates) % shape[:, np.newaxis]], axis=1)
    w, v, u = both
    first = np.lexsort((v, u, w))[0]
    return int(w[first]), int(v[first]), int(u[first])


def update_coefficient(state: SpectrumState, k: tuple[int, int, int], gamma: float) -> SpectrumState:
    """Add gamma * R_w(k) / W(0) to c[k] (and the conjugate to c[-k]) and update R_w accordingly."""
    w0 = state.weight_sum
    if w0 <= 0.0:
        raise EmptySupport("the weight volume is zero, no support available")
    partner = conjugate_index(k, state.shape)
    increment = state.residual_at(k) / w0
    coefficients = state.model.coefficients

    if partner == k:
        step = gamma * increment.real
        coefficients[k] += step
        state.residual -= step * state.shifted_weight(k)
    else:
        step = gamma * increment
        coefficients[k] += step
        coefficients[partner] += np.conj(step)
        state.residual -= step * state.shifted_weight(k)
        state.residual -= np.conj(step) * state.shifted_weight(partner)
    return state


def _check_inputs(window: ExtrapolationWindow, weights: WeightVolume):
    if weights.w.shape != window.values.shape:
        raise DimensionMismatch(f"weights shape {weights.w.shape} does not match window shape {window.values.shape}")


def generate_model(window: ExtrapolationWindow, weights: WeightVolume, params: FseParams) -> np.ndarray:
    """Generate the FSE model of a window; returns a real field of the window's shape."""
    _check_inputs(window, weights)
    shape = transform_shape(params, window.dims)
    if not np.any(weights.w > 0):
        logger.warning("no support in %s, returning an all-zero model", window)
        return np.zeros(window.values.shape)

    w = _pad(weights.w, shape)
    f = _pad(window.values, shape)
    state = SpectrumState(
        model=ModelSpectrum(np.zeros(shape, dtype=np.complex128)),
        residual=np.fft.rfftn(w * f),
        weight_spectrum=np.fft.fftn(w),
    )

    w0 = state.weight_sum
    for _ in range(params.max_iterations):
        k = select_basis(state.residual, fft_width=shape[2])
        gain = abs(state.residual_at(k)) ** 2 / w0
        if gain <= 0.0 or gain < params.min_gain:
            break
        update_coefficient(state, k, params.gamma)

    return state.model.to_spatial(window.dims).real


def oracle_matching_pursuit(window: ExtrapolationWindow, weights: WeightVolume,
                            params: FseParams, max_iterations: Optional[int] = None) -> np.ndarray:
    """The same greedy algorithm evaluated naively in the spatial domain.

    Basis functions are evaluated explicitly on the window voxels, projections
    are explicit weighted inner products and the residual is updated voxel by
    voxel. Only meant for small windows, to check ``generate_model``.
    """
    _check_inputs(window, weights)
    shape = transform_shape(params, window.dims)
    iterations = params.max_iterations if max_iterations is None else max_iterations
    w = weights.w.reshape(-1)
    if not np.any(w > 0):
        logger.warning("no support in %s, returning an all-zero model", window)
        return np.zeros(window.values.shape)

    p_dim, n_dim, m_dim = window.values.shape
    pf, nf, mf = shape
    voxels = np.stack(np.indices((p_dim, n_dim, m_dim)).reshape(3, -1), axis=1)
    frequencies = np.stack(np.indices(shape).reshape(3, -1), axis=1)
    phase = (
        np.outer(frequencies[:, 0], voxels[:, 0]) / pf
        + np.outer(frequencies[:, 1], voxels[:, 1]) / nf
        + np.outer(frequencies[:, 2], voxels[:, 2]) / mf
    )
    basis = np.exp(2j * np.pi * phase)

    residual = window.values.reshape(-1).astype(np.complex128)
    coefficients = np.zeros(frequencies.shape[0], dtype=np.complex128)
    weight_sum = w.sum()
    partner_of = np.ravel_multi_index(((-frequencies) % np.array(shape)).T, shape)

    for _ in range(iterations):
        projections = basis.conj() @ (w * residual)
        energy = np.abs(projections) ** 2
        energy = 0.5 * (energy + energy[partner_of])
        k = np.ravel_multi_index(lexicographic_argmax(energy.reshape(shape)), shape)
        gain = abs(projections[k]) ** 2 / weight_sum
        if gain <= 0.0 or gain < params.min_gain:
            break
        increment = projections[k] / weight_sum
        partner = partner_of[k]
        if partner == k:
            step = params.gamma * increment.real
            coefficients[k] += step
            residual -= step * basis[k]
        else:
            step = params.gamma * increment
            coefficients[k] += step
            coefficients[partner] += np.conj(step)
            residual -= step * basis[k] + np.conj(step) * basis[partner]

    model = coefficients @ basis
    return model.real.reshape(window.values.shape)

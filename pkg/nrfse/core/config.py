"""Reconstruction configuration.

A run is described by one frozen ``ReconstructionConfig``. It can be built from
keyword arguments or from the flat ``key = value`` mapping shared by config
files and command line flags (see ``from_flat``).
"""

from enum import StrEnum
from pathlib import Path
from typing import Any, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from nrfse import settings
from nrfse.core.exceptions import InvalidParameters
from nrfse.core.fse import FseParams
from nrfse.core.motion import FlowParams
from nrfse.core.sampling import MaskSeed
from nrfse.core.serializers import VideoFormat
from nrfse.core.weighting import WeightParams


class Mode(StrEnum):
    BILINEAR = "bilinear"
    FSE2D = "fse2d"
    FSE3D = "fse3d"
    FSE3D_MCW = "fse3d-mcw"


FSE_KEYS = {
    "block": "block",
    "border": "border",
    "fft_size": "fft_size",
    "rho_hat": "rho_hat",
    "gamma": "gamma",
    "delta": "delta",
    "max_iterations": "max_iterations",
    "min_gain": "min_gain",
    "temporal_window": "temporal_window",
}

FLOW_KEYS = {
    "flow_levels": "levels",
    "flow_window_radius": "window_radius",
    "flow_iterations": "iterations_per_level",
    "flow_poly_n": "poly_n",
    "flow_poly_sigma": "poly_sigma",
}

RUN_KEYS = {
    "mode": "mode",
    "seeds": "seeds",
    "workers": "workers",
    "show_progress": "show_progress",
    "width": "width",
    "height": "height",
    "frames": "frames",
    "input": "input",
    "output": "output",
    "mask": "mask",
    "manifest": "manifest",
    "format": "video_format",
}


def split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    if isinstance(value, int):
        return [value]
    return value


class ReconstructionConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: Mode = Mode.FSE3D_MCW
    fse: FseParams = FseParams()
    flow: FlowParams = FlowParams()
    seeds: tuple[MaskSeed, ...] = settings.DEFAULT_SEEDS
    workers: int = Field(default_factory=lambda: settings.WORKERS, ge=1, validate_default=True)
    show_progress: bool = settings.SHOW_PROGRESS

    width: Optional[int] = Field(None, gt=0)
    height: Optional[int] = Field(None, gt=0)
    frames: Optional[int] = Field(None, gt=0)
    input: Optional[Path] = None
    output: Optional[Path] = None
    mask: Optional[Path] = None
    manifest: Optional[Path] = None
    video_format: VideoFormat = "gray"

    @field_validator("seeds", mode="before")
    @classmethod
    def split_seeds(cls, value):
        return split_list(value)

    @property
    def fse_params(self) -> FseParams:
        """FSE settings in effect; 2D-FSE always works on single-slice windows."""
        if self.mode == Mode.FSE2D and self.fse.temporal_window != 1:
            block = (self.fse.block[0], self.fse.block[1], 1)
            return self.fse.model_copy(update={"temporal_window": 1, "block": block})
        return self.fse

    @property
    def weight(self) -> WeightParams:
        return self.fse_params.weight_params()

    @classmethod
    def from_flat(cls, values: Mapping[str, Any], **overrides) -> "ReconstructionConfig":
        run, fse, flow, unknown = split_flat(values)
        if unknown:
            raise InvalidParameters(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        return cls(**run, fse=FseParams(**fse), flow=FlowParams(**flow), **overrides)

    def to_flat(self) -> dict[str, Any]:
        """Inverse of ``from_flat``, used for manifests."""
        flat = {key: getattr(self, field) for key, field in RUN_KEYS.items()}
        flat.update({key: getattr(self.fse_params, field) for key, field in FSE_KEYS.items()})
        flat.update({key: getattr(self.flow, field) for key, field in FLOW_KEYS.items()})
        return flat


def split_flat(values: Mapping[str, Any]) -> tuple[dict, dict, dict, dict]:
    """Sort flat keys into run, FSE and flow keyword arguments; None values are skipped."""
    run, fse, flow, unknown = {}, {}, {}, {}
    for key, value in values.items():
        if value is None:
            continue
        if key in RUN_KEYS:
            run[RUN_KEYS[key]] = value
        elif key in FSE_KEYS:
            fse[FSE_KEYS[key]] = value
        elif key in FLOW_KEYS:
            flow[FLOW_KEYS[key]] = value
        else:
            unknown[key] = value
    return run, fse, flow, unknown


def read_config_file(path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    values = {}
    for number, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise InvalidParameters(f"{path}:{number}: expected 'key = value', got {line!r}")
        values[key.strip()] = value.strip()
    return values

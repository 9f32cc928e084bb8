"""Readers and writers for masks, flow dumps, video files and run manifests."""

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

import cv2
import numpy as np

from nrfse.core.exceptions import DimensionMismatch, MalformedFile
from nrfse.core.models import SamplingMask, VideoVolume
from nrfse.core.motion import VectorField

VideoFormat = Literal["gray", "yuv420", "pgm"]

MASK_MAGIC = "NRMASK"
FLOW_MAGIC = "FLOW"


# Mask files: "NRMASK <w> <h> <frames>\n" then frame 0 as row-major '0'/'1' bytes.

def write_mask(path, mask: SamplingMask):
    if not mask.is_temporally_constant():
        raise MalformedFile("only temporally constant masks can be stored")
    header = f"{MASK_MAGIC} {mask.width} {mask.height} {mask.frames}\n".encode("ascii")
    body = np.where(mask.bits[0], ord("1"), ord("0")).astype(np.uint8).tobytes()
    Path(path).write_bytes(header + body)


def read_mask(path) -> SamplingMask:
    data = Path(path).read_bytes()
    header, sep, body = data.partition(b"\n")
    fields = header.decode("ascii", errors="replace").split()
    if not sep or len(fields) != 4 or fields[0] != MASK_MAGIC:
        raise MalformedFile(f"{path} is not an {MASK_MAGIC} file")
    try:
        width, height, frames = (int(value) for value in fields[1:])
    except ValueError as exc:
        raise MalformedFile(f"bad {MASK_MAGIC} header in {path}: {header!r}") from exc
    if len(body) != width * height:
        raise MalformedFile(f"{path} holds {len(body)} mask bytes, expected {width * height}")
    raw = np.frombuffer(body, dtype=np.uint8)
    if not np.all((raw == ord("0")) | (raw == ord("1"))):
        raise MalformedFile(f"{path} contains bytes other than '0' and '1'")
    return SamplingMask.from_frame((raw == ord("1")).reshape(height, width), frames)


# Flow dumps: "FLOW <w> <h>\n" then row-major float32 pairs (vx, vy).

def write_flow(path, field: VectorField):
    header = f"{FLOW_MAGIC} {field.width} {field.height}\n".encode("ascii")
    body = np.stack([field.vx, field.vy], axis=-1).astype("<f4").tobytes()
    Path(path).write_bytes(header + body)


def read_flow(path) -> VectorField:
    data = Path(path).read_bytes()
    header, sep, body = data.partition(b"\n")
    fields = header.decode("ascii", errors="replace").split()
    if not sep or len(fields) != 3 or fields[0] != FLOW_MAGIC:
        raise MalformedFile(f"{path} is not a {FLOW_MAGIC} file")
    width, height = int(fields[1]), int(fields[2])
    if len(body) != width * height * 8:
        raise MalformedFile(f"{path} holds {len(body)} flow bytes, expected {width * height * 8}")
    pairs = np.frombuffer(body, dtype="<f4").reshape(height, width, 2)
    return VectorField(pairs[..., 0], pairs[..., 1])


# Video

def _frame_bytes(width: int, height: int, video_format: VideoFormat) -> int:
    if video_format == "yuv420":
        return width * height + 2 * ((width + 1) // 2) * ((height + 1) // 2)
    return width * height


def read_video(path, width: int, height: int, video_format: VideoFormat = "gray",
               frames: Optional[int] = None) -> VideoVolume:
    """Read luma from raw gray planar, planar YUV 4:2:0 or a directory of PGM frames.

    ``frames`` limits the read to the first N frames.
    """
    path = Path(path)
    if video_format == "pgm":
        return _read_pgm_sequence(path, width, height, frames)
    if video_format not in ("gray", "yuv420"):
        raise MalformedFile(f"unknown video format {video_format!r}")
    if not path.exists():
        raise FileNotFoundError(f"video file not found: {path}")

    frame_bytes = _frame_bytes(width, height, video_format)
    size = path.stat().st_size
    if size % frame_bytes:
        raise DimensionMismatch(f"{path} size {size} is not a multiple of the {width}x{height} {video_format} frame size")
    available = size // frame_bytes
    count = available if frames is None else min(frames, available)
    if count < 1:
        raise DimensionMismatch(f"{path} holds no complete frame")

    raw = np.fromfile(path, dtype=np.uint8, count=count * frame_bytes).reshape(count, frame_bytes)
    luma = raw[:, : width * height].reshape(count, height, width)
    return VideoVolume(luma.astype(np.float64))


def _read_pgm_sequence(directory: Path, width: int, height: int, frames: Optional[int]) -> VideoVolume:
    files = sorted(directory.glob("*.pgm"))
    if frames is not None:
        files = files[:frames]
    if not files:
        raise FileNotFoundError(f"no .pgm frames found in {directory}")
    planes = []
    for file in files:
        plane = cv2.imread(str(file), cv2.IMREAD_UNCHANGED)
        if plane is None:
            raise MalformedFile(f"cannot decode {file}")
        if plane.shape != (height, width):
            raise DimensionMismatch(f"{file} is {plane.shape[1]}x{plane.shape[0]}, expected {width}x{height}")
        planes.append(plane)
    return VideoVolume(np.stack(planes).astype(np.float64))


def write_video(path, volume: VideoVolume, video_format: VideoFormat = "gray"):
    """Write 8-bit luma; yuv420 output gets neutral (128) chroma planes."""
    path = Path(path)
    frames = volume.to_uint8()
    if video_format == "pgm":
        path.mkdir(parents=True, exist_ok=True)
        for t, plane in enumerate(frames):
            if not cv2.imwrite(str(path / f"frame_{t:04d}.pgm"), plane):
                raise MalformedFile(f"cannot write frame {t} to {path}")
        return
    if video_format not in ("gray", "yuv420"):
        raise MalformedFile(f"unknown video format {video_format!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        chroma = bytes([128]) * (_frame_bytes(volume.width, volume.height, video_format) - volume.width * volume.height)
        for plane in frames:
            handle.write(plane.tobytes())
            handle.write(chroma)


# Manifests

def file_digest(path) -> str:
    path = Path(path)
    digest = hashlib.sha256()
    files = sorted(path.glob("*.pgm")) if path.is_dir() else [path]
    for file in files:
        with open(file, "rb") as handle:
            for chunk in iter(lambda: handle.read(1 << 20), b""):
                digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, manifest: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")

"""PSNR evaluation and the multi-mask benchmark.

Every (sequence, mode) cell is reconstructed from several differently sampled
versions of the sequence and the PSNR values are averaged over the masks.
"""

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from tqdm import tqdm

from nrfse import settings
from nrfse.core.config import Mode, ReconstructionConfig, split_list
from nrfse.core.exceptions import DimensionMismatch, InvalidParameters
from nrfse.core.models import VideoVolume
from nrfse.core.pipeline import reconstruct
from nrfse.core.sampling import apply_mask, generate_quadrant_mask
from nrfse.core.serializers import read_video
from nrfse.core.synthetic import SYNTHETIC_SEQUENCES

logger = logging.getLogger(__name__)

CSV_FIELDS = ["sequence", "mode", "seed", "psnr_db", "runtime_s"]

SYNTHETIC_SIZE = (128, 128, 15)

BENCH_KEYS = ("sequences", "modes", "csv")


def _mse(reference: np.ndarray, test: np.ndarray) -> float:
    difference = reference - test
    return float(np.mean(difference * difference))


def _to_db(mse: float, peak: float) -> float:
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def psnr(reference: VideoVolume, test: VideoVolume, peak: float = settings.PEAK_VALUE) -> float:
    """10 log10(peak^2 / MSE) over every pixel of every frame; identical volumes give inf."""
    if reference.shape != test.shape:
        raise DimensionMismatch(f"cannot compare {reference} with {test}")
    return _to_db(_mse(reference.samples, test.samples), peak)


def psnr_in_region(reference: VideoVolume, test: VideoVolume, region: np.ndarray,
                   peak: float = settings.PEAK_VALUE) -> float:
    """PSNR restricted to the pixels where ``region`` is True (e.g. the loss area)."""
    if reference.shape != test.shape or region.shape != reference.shape:
        raise DimensionMismatch(f"cannot compare {reference} with {test} over a {region.shape} region")
    if not region.any():
        return math.inf
    return _to_db(_mse(reference.samples[region], test.samples[region]), peak)


class BenchConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    sequences: tuple[str, ...]
    modes: tuple[Mode, ...] = tuple(Mode)
    reconstruction: ReconstructionConfig = Field(default_factory=ReconstructionConfig)
    csv: Optional[Path] = None

    @field_validator("sequences", "modes", mode="before")
    @classmethod
    def split_names(cls, value):
        return split_list(value)

    @property
    def seeds(self) -> tuple[int, ...]:
        return self.reconstruction.seeds

    @classmethod
    def from_flat(cls, values: Mapping[str, Any]) -> "BenchConfig":
        """Bench keys (sequences, modes, csv) plus any reconstruction key."""
        values = dict(values)
        bench = {key: values.pop(key) for key in BENCH_KEYS if key in values}
        bench = {key: value for key, value in bench.items() if value is not None}
        if "sequences" not in bench:
            raise InvalidParameters("the benchmark needs at least one sequence")
        return cls(reconstruction=ReconstructionConfig.from_flat(values), **bench)


@dataclass
class BenchCell:
    sequence: str
    mode: Mode
    seed: int
    psnr_db: float
    psnr_loss_db: float
    runtime_s: float


@dataclass
class BenchReport:
    cells: list[BenchCell] = field(default_factory=list)
    missing: list[str] = field(default_factory=list)
    runtime_s: float = 0.0

    def sequences(self) -> list[str]:
        return list(dict.fromkeys(cell.sequence for cell in self.cells))

    def modes(self) -> list[Mode]:
        return list(dict.fromkeys(cell.mode for cell in self.cells))

    def average(self, sequence: str, mode: Mode, loss_only: bool = False) -> float:
        values = [cell.psnr_loss_db if loss_only else cell.psnr_db
                  for cell in self.cells if cell.sequence == sequence and cell.mode == mode]
        if not values:
            return math.nan
        return sum(values) / len(values)

    def overall(self, mode: Mode, loss_only: bool = False) -> float:
        values = [self.average(sequence, mode, loss_only) for sequence in self.sequences()]
        values = [value for value in values if not math.isnan(value)]
        return sum(values) / len(values) if values else math.nan

    def to_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(CSV_FIELDS)
            for cell in self.cells:
                writer.writerow([cell.sequence, str(cell.mode), cell.seed, f"{cell.psnr_db:.6f}", f"{cell.runtime_s:.3f}"])

    def as_table(self) -> str:
        lines = []
        for title, loss_only in (("PSNR (all pixels)", False), ("PSNR (loss area only)", True)):
            lines.append(self._table(title, loss_only))
        if self.missing:
            lines.append("missing sequences: " + ", ".join(self.missing))
        return "\n\n".join(lines)

    def _table(self, title: str, loss_only: bool) -> str:
        modes = self.modes()
        names = self.sequences() + ["Average"]
        name_width = max([len(title)] + [len(name) for name in names]) + 2
        header = title.ljust(name_width) + "".join(str(mode).rjust(14) for mode in modes)
        rows = [header, "-" * len(header)]
        for name in names:
            if name == "Average":
                rows.append("-" * len(header))
                values = [self.overall(mode, loss_only) for mode in modes]
            else:
                values = [self.average(name, mode, loss_only) for mode in modes]
            rows.append(name.ljust(name_width) + "".join(f"{value:11.2f} dB" for value in values))
        return "\n".join(rows)


def load_sequence(name: str, config: ReconstructionConfig) -> VideoVolume:
    """Synthetic sequences by name, everything else read from disk (first N frames)."""
    frames = config.frames or settings.DEFAULT_BENCH_FRAMES
    if name in SYNTHETIC_SEQUENCES:
        width = config.width or SYNTHETIC_SIZE[0]
        height = config.height or SYNTHETIC_SIZE[1]
        return SYNTHETIC_SEQUENCES[name](width, height, config.frames or SYNTHETIC_SIZE[2])
    if config.width is None or config.height is None:
        raise InvalidParameters(f"width and height are needed to read {name}")
    return read_video(name, config.width, config.height, config.video_format, frames=frames)


def run_benchmark(config: BenchConfig) -> BenchReport:
    """Reconstruct every sequence under every mask seed and mode and collect PSNR values.

    Sequences that cannot be found are listed in the report and skipped.
    """
    report = BenchReport()
    start = time.perf_counter()
    base = config.reconstruction
    cells = len(config.sequences) * len(config.seeds) * len(config.modes)
    progress = tqdm(total=cells, desc="bench", disable=not base.show_progress)

    for name in config.sequences:
        try:
            reference = load_sequence(name, base)
        except FileNotFoundError as exc:
            logger.warning("skipping %s: %s", name, exc)
            report.missing.append(name)
            progress.update(len(config.seeds) * len(config.modes))
            continue
        reference = VideoVolume(reference.to_uint8())

        for seed in config.seeds:
            mask = generate_quadrant_mask(reference.width, reference.height, reference.frames, seed)
            sampled = apply_mask(reference, mask)
            for mode in config.modes:
                stats = {}
                output = reconstruct(sampled, mask, base.model_copy(update={"mode": mode}), stats=stats)
                output = VideoVolume(output.to_uint8())
                cell = BenchCell(
                    sequence=name,
                    mode=mode,
                    seed=seed,
                    psnr_db=psnr(reference, output),
                    psnr_loss_db=psnr_in_region(reference, output, ~mask.bits),
                    runtime_s=stats["runtime_s"],
                )
                logger.info("%s %s seed %d: %.2f dB", name, mode, seed, cell.psnr_db)
                report.cells.append(cell)
                progress.update(1)

    progress.close()
    report.runtime_s = time.perf_counter() - start
    return report

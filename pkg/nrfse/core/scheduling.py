"""Processing order of loss blocks.

Blocks whose windows hold more original samples are reconstructed first, so
that blocks with sparse support can lean on already reconstructed (R) voxels.
For multi-threaded runs the order is cut into batches that can run
concurrently without changing the result of sequential processing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

from nrfse.core.fse import FseParams
from nrfse.core.models import SamplingMask, block_extent_at, window_geometry

Box = tuple[tuple[int, int], tuple[int, int], tuple[int, int]]


@dataclass(frozen=True)
class ScheduledBlock:
    origin: tuple[int, int, int]
    extent: tuple[int, int, int]
    score: float

    def block_box(self) -> Box:
        (x, y, t), (mb, nb, pb) = self.origin, self.extent
        return (t, t + pb), (y, y + nb), (x, x + mb)

    def window_box(self, fse: FseParams) -> Box:
        (x0, y0, t0), (m, n, p) = window_geometry(self.origin, self.extent, fse.border, fse.temporal_window)
        return (t0, t0 + p), (y0, y0 + n), (x0, x0 + m)

    @property
    def raster_key(self) -> tuple[int, int, int]:
        x, y, t = self.origin
        return t, y, x


@dataclass
class BlockSchedule:
    blocks: list[ScheduledBlock] = field(default_factory=list)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self) -> Iterator[ScheduledBlock]:
        return iter(self.blocks)

    def __getitem__(self, index):
        return self.blocks[index]


def _overlaps(a: Box, b: Box) -> bool:
    return all(lo_a < hi_b and lo_b < hi_a for (lo_a, hi_a), (lo_b, hi_b) in zip(a, b))


def _integral(bits: np.ndarray) -> np.ndarray:
    table = np.zeros(tuple(size + 1 for size in bits.shape), dtype=np.int64)
    table[1:, 1:, 1:] = bits.astype(np.int64).cumsum(0).cumsum(1).cumsum(2)
    return table


def _box_sum(table: np.ndarray, box: Box) -> int:
    """Sum of the original array over ``box``, clipped to the array."""
    (t0, t1), (y0, y1), (x0, x1) = (
        (max(lo, 0), min(hi, limit - 1)) for (lo, hi), limit in zip(box, table.shape)
    )
    if t1 <= t0 or y1 <= y0 or x1 <= x0:
        return 0
    return int(
        table[t1, y1, x1] - table[t0, y1, x1] - table[t1, y0, x1] - table[t1, y1, x0]
        + table[t0, y0, x1] + table[t0, y1, x0] + table[t1, y0, x0] - table[t0, y0, x0]
    )


def schedule_blocks(mask: SamplingMask, frame_range: Optional[Iterable[int]], fse: FseParams) -> BlockSchedule:
    """Order every loss block by the share of original samples in its window.

    The score is the number of mask-true voxels of the window footprint over
    M * N * P, so voxels beyond the sequence count as missing. Ties keep
    raster order (t, y, x). A rim of partial blocks covers frames that the
    block size does not divide.
    """
    frames = range(mask.frames) if frame_range is None else frame_range
    mb, nb, pb = fse.block
    table = _integral(mask.bits)
    blocks = []
    for t in list(frames)[::pb]:
        for y in range(0, mask.height, nb):
            for x in range(0, mask.width, mb):
                origin = (x, y, t)
                extent = block_extent_at(mask.shape, origin, fse.block)
                region = mask.bits[t:t + extent[2], y:y + extent[1], x:x + extent[0]]
                if region.all():
                    continue
                block = ScheduledBlock(origin, extent, 0.0)
                m, n, p = (extent[0] + 2 * fse.border, extent[1] + 2 * fse.border, fse.temporal_window)
                score = _box_sum(table, block.window_box(fse)) / (m * n * p)
                blocks.append(ScheduledBlock(origin, extent, score))
    blocks.sort(key=lambda block: (-block.score, block.raster_key))
    return BlockSchedule(blocks)


def conflict_free_batches(schedule: BlockSchedule, fse: FseParams, max_batch: int,
                          lookahead: Optional[int] = None) -> list[list[ScheduledBlock]]:
    """Cut the schedule into batches whose members may run concurrently.

    A block joins the current batch only if neither it nor any earlier block
    that is still pending reads what the other writes. Running the batches in
    order therefore gives exactly the result of the plain schedule.
    """
    lookahead = 4 * max_batch if lookahead is None else lookahead
    remaining = list(schedule.blocks)
    batches = []
    while remaining:
        batch, pending, deferred = [], [], []
        for index, block in enumerate(remaining):
            if len(batch) >= max_batch or index >= lookahead:
                deferred.extend(remaining[index:])
                break
            block_box, window_box = block.block_box(), block.window_box(fse)
            if all(not _overlaps(window_box, other_block) and not _overlaps(block_box, other_window)
                   for other_block, other_window in pending):
                batch.append(block)
            else:
                deferred.append(block)
            pending.append((block_box, window_box))
        batches.append(batch)
        remaining = deferred
    return batches

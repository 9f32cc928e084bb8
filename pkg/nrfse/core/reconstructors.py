import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from tqdm import tqdm

from nrfse.core.config import Mode, ReconstructionConfig
from nrfse.core.exceptions import NrfseError
from nrfse.core.fse import generate_model
from nrfse.core.models import ExtrapolationWindow, SamplingMask, VideoVolume, extract_window, insert_block
from nrfse.core.motion import FlowCache, bilinear_init, window_motion
from nrfse.core.scheduling import ScheduledBlock, conflict_free_batches, schedule_blocks
from nrfse.core.weighting import SliceMotion, build_weight_volume

logger = logging.getLogger(__name__)


class BaseReconstructor(ABC):
    """Abstract base class for reconstructors."""

    def __init__(self, config: ReconstructionConfig):
        self.config = config
        self.blocks_processed = 0

    @abstractmethod
    def reconstruct(self, sampled: VideoVolume, mask: SamplingMask) -> VideoVolume:
        """Returns the sequence with every mask-false pixel filled in."""
        pass


class BilinearReconstructor(BaseReconstructor):
    """Reconstructor that only runs the bilinear bootstrap interpolation."""

    def reconstruct(self, sampled: VideoVolume, mask: SamplingMask) -> VideoVolume:
        return bilinear_init(sampled, mask)


class FseReconstructor(BaseReconstructor):
    """Block-wise FSE with the static weighting (3D-FSE, or 2D-FSE on single-slice windows)."""

    def prepare(self, sampled: VideoVolume, mask: SamplingMask):
        pass

    def slice_motion(self, window: ExtrapolationWindow) -> Optional[SliceMotion]:
        return None

    def reconstruct(self, sampled: VideoVolume, mask: SamplingMask) -> VideoVolume:
        mask.check_matches(sampled)
        fse = self.config.fse_params
        volume = VideoVolume(np.where(mask.bits, sampled.samples, 0.0))
        recon_flags = np.zeros(volume.shape, dtype=bool)

        self.prepare(sampled, mask)
        schedule = schedule_blocks(mask, None, fse)
        progress = tqdm(total=len(schedule), desc=str(self.config.mode), disable=not self.config.show_progress)

        def process(block: ScheduledBlock):
            window = extract_window(volume, mask, recon_flags, block.origin, fse, block.extent)
            weights = build_weight_volume(window, self.slice_motion(window), self.config.weight)
            model = generate_model(window, weights, fse)
            insert_block(volume, window, model, block.extent, recon_flags)

        workers = self.config.workers
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for batch in conflict_free_batches(schedule, fse, max_batch=4 * workers):
                    list(pool.map(process, batch))
                    progress.update(len(batch))
        else:
            for block in schedule:
                process(block)
                progress.update(1)
        progress.close()
        self.blocks_processed = len(schedule)

        missing = ~(mask.bits | recon_flags)
        if missing.any():
            raise NrfseError(f"{int(missing.sum())} pixels were left unreconstructed")
        return volume


class MotionCompensatedFseReconstructor(FseReconstructor):
    """FSE whose weighting follows the averaged optical flow of every window slice."""

    def prepare(self, sampled: VideoVolume, mask: SamplingMask):
        self.interpolated = bilinear_init(sampled, mask)
        self.flow_cache = FlowCache(self.interpolated, self.config.flow)
        self.flow_cache.prime(workers=self.config.workers, show_progress=self.config.show_progress)

    def slice_motion(self, window: ExtrapolationWindow) -> Optional[SliceMotion]:
        x0, y0, t0 = window.origin
        m, n, p = window.dims
        center_frame = t0 + (p - 1) // 2
        return window_motion(self.interpolated, center_frame, (x0, y0, m, n), p, self.config.flow,
                             cache=self.flow_cache)


RECONSTRUCTORS = {
    Mode.BILINEAR: BilinearReconstructor,
    Mode.FSE2D: FseReconstructor,
    Mode.FSE3D: FseReconstructor,
    Mode.FSE3D_MCW: MotionCompensatedFseReconstructor,
}


def get_reconstructor(config: ReconstructionConfig) -> BaseReconstructor:
    return RECONSTRUCTORS[config.mode](config)

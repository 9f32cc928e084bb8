import csv
import math
import tempfile
from pathlib import Path
from unittest import TestCase, mock

import numpy as np

from nrfse.core.config import Mode
from nrfse.core.evaluation import (
    CSV_FIELDS,
    BenchCell,
    BenchConfig,
    BenchReport,
    load_sequence,
    psnr,
    psnr_in_region,
    run_benchmark,
)
from nrfse.core.exceptions import DimensionMismatch, InvalidParameters
from nrfse.core.models import VideoVolume


def fake_reconstruct(sampled, mask, config, stats=None):
    if stats is not None:
        stats.update(blocks=0, runtime_s=0.25)
    return VideoVolume(np.where(mask.bits, sampled.samples, 128.0))


class PsnrTests(TestCase):
    def setUp(self):
        rng = np.random.default_rng(0)
        self.reference = VideoVolume(rng.integers(16, 240, size=(3, 8, 8)).astype(float))

    def test_identical_volumes_are_infinite(self):
        self.assertEqual(psnr(self.reference, self.reference.copy()), math.inf)

    def test_constant_offset_of_sixteen(self):
        shifted = VideoVolume(self.reference.samples + 16.0)
        self.assertAlmostEqual(psnr(self.reference, shifted), 20 * math.log10(255 / 16), places=9)
        self.assertAlmostEqual(psnr(self.reference, shifted), 24.0484, places=4)

    def test_full_scale_error_is_zero_db(self):
        black = VideoVolume.zeros(4, 4, 2)
        white = VideoVolume(np.full((2, 4, 4), 255.0))
        self.assertAlmostEqual(psnr(black, white), 0.0, places=12)

    def test_symmetric(self):
        rng = np.random.default_rng(1)
        other = VideoVolume(rng.integers(0, 256, size=(3, 8, 8)).astype(float))
        self.assertEqual(psnr(self.reference, other), psnr(other, self.reference))

    def test_more_noise_gives_lower_psnr(self):
        rng = np.random.default_rng(2)
        noise = rng.normal(size=self.reference.shape)
        values = [psnr(self.reference, VideoVolume(self.reference.samples + sigma * noise)) for sigma in (1, 4, 16)]
        self.assertGreater(values[0], values[1])
        self.assertGreater(values[1], values[2])

    def test_region_only(self):
        test = self.reference.copy()
        region = np.zeros(self.reference.shape, dtype=bool)
        region[0, :4] = True
        test.samples[region] += 16.0
        test.samples[~region] += 1.0
        self.assertAlmostEqual(psnr_in_region(self.reference, test, region), 20 * math.log10(255 / 16), places=9)
        self.assertEqual(psnr_in_region(self.reference, test, np.zeros(self.reference.shape, dtype=bool)), math.inf)

    def test_rejects_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            psnr(self.reference, VideoVolume.zeros(8, 8, 2))


class BenchReportTests(TestCase):
    def setUp(self):
        self.report = BenchReport()
        values = {("a", Mode.FSE3D): [30.1, 29.7, 30.6], ("a", Mode.FSE3D_MCW): [31.0, 30.2, 30.9],
                  ("b", Mode.FSE3D): [27.5, 28.0, 27.9], ("b", Mode.FSE3D_MCW): [28.8, 29.1, 28.7]}
        for (sequence, mode), cells in values.items():
            for seed, value in enumerate(cells, start=1):
                self.report.cells.append(BenchCell(sequence, mode, seed, value, value - 2.0, 1.0))
        self.values = values

    def test_average_is_the_mean_over_masks(self):
        for (sequence, mode), cells in self.values.items():
            self.assertAlmostEqual(self.report.average(sequence, mode), sum(cells) / len(cells), places=12)
            self.assertAlmostEqual(self.report.average(sequence, mode, loss_only=True),
                                   sum(cells) / len(cells) - 2.0, places=12)

    def test_overall_average(self):
        expected = (np.mean(self.values[("a", Mode.FSE3D)]) + np.mean(self.values[("b", Mode.FSE3D)])) / 2
        self.assertAlmostEqual(self.report.overall(Mode.FSE3D), expected, places=12)

    def test_unknown_cell_is_nan(self):
        self.assertTrue(math.isnan(self.report.average("c", Mode.FSE3D)))

    def test_table_lists_sequences_and_average(self):
        self.report.missing.append("lost.yuv")
        table = self.report.as_table()
        self.assertIn("PSNR (all pixels)", table)
        self.assertIn("PSNR (loss area only)", table)
        self.assertIn("fse3d-mcw", table)
        self.assertIn("Average", table)
        self.assertIn("missing sequences: lost.yuv", table)

    def test_csv(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "out" / "bench.csv"
            self.report.to_csv(path)
            with open(path, newline="") as handle:
                rows = list(csv.reader(handle))
        self.assertEqual(rows[0], CSV_FIELDS)
        self.assertEqual(len(rows), 13)
        self.assertEqual(rows[1], ["a", "fse3d", "1", "30.100000", "1.000"])


class BenchConfigTests(TestCase):
    def test_from_flat(self):
        config = BenchConfig.from_flat({"sequences": "a.yuv, synthetic:static", "modes": "bilinear,fse3d",
                                        "seeds": "7", "width": "32", "height": "16"})
        self.assertEqual(config.sequences, ("a.yuv", "synthetic:static"))
        self.assertEqual(config.modes, (Mode.BILINEAR, Mode.FSE3D))
        self.assertEqual(config.seeds, (7,))
        self.assertEqual(config.reconstruction.width, 32)

    def test_all_modes_by_default(self):
        config = BenchConfig.from_flat({"sequences": "synthetic:static"})
        self.assertEqual(config.modes, tuple(Mode))

    def test_requires_sequences(self):
        with self.assertRaises(InvalidParameters):
            BenchConfig.from_flat({"modes": "fse3d"})


class RunBenchmarkTests(TestCase):
    def flat(self, **values):
        base = {"sequences": "synthetic:static", "width": 16, "height": 16, "frames": 2, "show_progress": False}
        base.update(values)
        return BenchConfig.from_flat(base)

    def test_one_reconstruction_per_sequence_mode_and_seed(self):
        config = self.flat(modes="bilinear,fse3d", seeds="1,2,3")
        with mock.patch("nrfse.core.evaluation.reconstruct", side_effect=fake_reconstruct) as reconstruct:
            report = run_benchmark(config)
        self.assertEqual(reconstruct.call_count, 6)
        self.assertEqual(len(report.cells), 6)
        self.assertEqual({(cell.sequence, cell.mode) for cell in report.cells},
                         {("synthetic:static", Mode.BILINEAR), ("synthetic:static", Mode.FSE3D)})
        self.assertEqual({cell.runtime_s for cell in report.cells}, {0.25})

    def test_single_seed_average_is_the_value(self):
        config = self.flat(modes="fse3d", seeds="4")
        with mock.patch("nrfse.core.evaluation.reconstruct", side_effect=fake_reconstruct):
            report = run_benchmark(config)
        self.assertEqual(report.average("synthetic:static", Mode.FSE3D), report.cells[0].psnr_db)

    def test_missing_sequences_are_listed_and_skipped(self):
        config = self.flat(sequences="does/not/exist.yuv,synthetic:static", modes="bilinear", seeds="1")
        report = run_benchmark(config)
        self.assertEqual(report.missing, ["does/not/exist.yuv"])
        self.assertEqual([cell.sequence for cell in report.cells], ["synthetic:static"])
        self.assertTrue(math.isfinite(report.cells[0].psnr_db))

    def test_synthetic_sequences_use_configured_size(self):
        config = self.flat(frames=3).reconstruction
        sequence = load_sequence("synthetic:translate", config)
        self.assertEqual(sequence.shape, (3, 16, 16))

    def test_files_need_dimensions(self):
        config = BenchConfig.from_flat({"sequences": "clip.yuv"}).reconstruction
        with self.assertRaises(InvalidParameters):
            load_sequence("clip.yuv", config)

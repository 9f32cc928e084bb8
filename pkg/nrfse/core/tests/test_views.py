import contextlib
import io
import json
import tempfile
from pathlib import Path
from unittest import TestCase, mock

import numpy as np

from nrfse import settings
from nrfse.core.models import VideoVolume
from nrfse.core.serializers import read_flow, read_mask, read_video, write_video
from nrfse.core.synthetic import translating_texture
from nrfse.management import run_cli

SMALL_RUN = ["--border", "4", "--fft-size", "16x16x4", "--temporal-window", "3", "--max-iterations", "10",
             "--workers", "1", "--no-progress"]


class CommandLineTestCase(TestCase):
    def setUp(self):
        self._directory = tempfile.TemporaryDirectory()
        self.directory = Path(self._directory.name)

    def tearDown(self):
        self._directory.cleanup()

    def path(self, name: str) -> str:
        return str(self.directory / name)

    def run_command(self, *argv: str) -> tuple[int, str, str]:
        stdout, stderr = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            status = run_cli(list(argv))
        return status, stdout.getvalue(), stderr.getvalue()

    def last_json(self, text: str) -> dict:
        return json.loads(text.strip().splitlines()[-1])

    def write_sequence(self, name: str, width=32, height=32, frames=3) -> str:
        path = self.path(name)
        write_video(path, translating_texture(width, height, frames, velocity=(1, 0), seed=3))
        return path

    def make_mask(self, name: str, width=32, height=32, frames=3, seed=7) -> str:
        path = self.path(name)
        status, _, _ = self.run_command("mask", "--width", str(width), "--height", str(height),
                                        "--frames", str(frames), "--seed", str(seed), "--output", path)
        self.assertEqual(status, 0)
        return path


class MaskCommandTests(CommandLineTestCase):
    def test_class_d_mask(self):
        path = self.path("d.nrm")
        status, stdout, _ = self.run_command("mask", "--width", "416", "--height", "240", "--frames", "50",
                                             "--seed", "7", "--output", path)
        self.assertEqual(status, 0)
        self.assertEqual(self.last_json(stdout)["density"], 0.25)
        mask = read_mask(path)
        self.assertEqual(mask.shape, (50, 240, 416))
        self.assertEqual(mask.density, 0.25)

    def test_apply_writes_the_sampled_sequence(self):
        source = self.write_sequence("clip.gray")
        sampled = self.path("sampled.gray")
        status, _, _ = self.run_command("mask", "--width", "32", "--height", "32", "--frames", "3",
                                        "--output", self.path("m.nrm"), "--apply", source, "--sampled", sampled)
        self.assertEqual(status, 0)
        mask = read_mask(self.path("m.nrm"))
        volume = read_video(sampled, 32, 32)
        self.assertFalse(volume.samples[~mask.bits].any())

    def test_apply_needs_an_output(self):
        status, _, stderr = self.run_command("mask", "--width", "4", "--height", "4", "--frames", "1",
                                             "--output", self.path("m.nrm"), "--apply", "clip.gray")
        self.assertEqual(status, 2)
        self.assertIn("usage", stderr)


class ReconstructCommandTests(CommandLineTestCase):
    def test_motion_compensated_run_writes_output_and_manifest(self):
        source = self.write_sequence("clip.gray")
        mask = self.make_mask("m.nrm")
        output = self.path("out.gray")
        status, stdout, _ = self.run_command("reconstruct", "--mode", "fse3d-mcw", "--width", "32", "--height", "32",
                                             "--input", source, "--mask", mask, "--output", output, *SMALL_RUN)
        self.assertEqual(status, 0, stdout)
        self.assertEqual(read_video(output, 32, 32).frames, 3)
        manifest = json.loads(Path(output + ".manifest.json").read_text())
        self.assertEqual(manifest["mode"], "fse3d-mcw")
        self.assertEqual(manifest["parameters"]["border"], 4)
        self.assertEqual(manifest["blocks"], 8 * 8 * 3)
        self.assertEqual(len(manifest["inputs"]["input"]["sha256"]), 64)
        self.assertIn("numpy", manifest["versions"])

    def test_flags_override_the_config_file(self):
        source = self.write_sequence("clip.gray")
        mask = self.make_mask("m.nrm")
        config = self.path("run.cfg")
        Path(config).write_text(f"mode = bilinear\nwidth = 32\nheight = 32\ninput = {source}\nmask = {mask}\n"
                                f"output = {self.path('out.gray')}\nborder = 2\n")
        status, _, _ = self.run_command("reconstruct", "--config", config, "--mode", "fse2d", *SMALL_RUN)
        self.assertEqual(status, 0)
        manifest = json.loads(Path(self.path("out.gray.manifest.json")).read_text())
        self.assertEqual(manifest["mode"], "fse2d")
        self.assertEqual(manifest["parameters"]["border"], 4)

    def test_missing_input_is_an_io_error(self):
        mask = self.make_mask("m.nrm")
        status, _, stderr = self.run_command("reconstruct", "--width", "32", "--height", "32", "--input",
                                             self.path("absent.gray"), "--mask", mask,
                                             "--output", self.path("out.gray"), *SMALL_RUN)
        self.assertEqual(status, 1)
        self.assertEqual(self.last_json(stderr)["code"], "E_IO")

    def test_invalid_parameter_is_a_config_error(self):
        source = self.write_sequence("clip.gray")
        mask = self.make_mask("m.nrm")
        status, _, stderr = self.run_command("reconstruct", "--width", "32", "--height", "32", "--input", source,
                                             "--mask", mask, "--output", self.path("out.gray"), "--rho-hat", "1.5")
        self.assertEqual(status, 1)
        error = self.last_json(stderr)
        self.assertEqual(error["code"], "E_CONFIG")
        self.assertIn("rho_hat", error["error"])

    def test_mask_of_other_size_is_a_dimension_error(self):
        source = self.write_sequence("clip.gray")
        mask = self.make_mask("m.nrm", width=16, height=16)
        status, _, stderr = self.run_command("reconstruct", "--width", "32", "--height", "32", "--input", source,
                                             "--mask", mask, "--output", self.path("out.gray"), *SMALL_RUN)
        self.assertEqual(status, 1)
        self.assertEqual(self.last_json(stderr)["code"], "E_DIMENSION")

    def test_malformed_worker_setting_is_a_config_error(self):
        with mock.patch.object(settings, "WORKERS", "many"):
            status, _, stderr = self.run_command("reconstruct", "--width", "32", "--height", "32")
        self.assertEqual(status, 1)
        error = self.last_json(stderr)
        self.assertEqual(error["code"], "E_CONFIG")
        self.assertIn("workers", error["error"])

    def test_missing_settings(self):
        status, _, stderr = self.run_command("reconstruct", "--width", "32", "--height", "32")
        self.assertEqual(status, 1)
        self.assertEqual(self.last_json(stderr)["code"], "E_CONFIG")


class OtherCommandTests(CommandLineTestCase):
    def test_unknown_subcommand(self):
        status, _, stderr = self.run_command("transmogrify")
        self.assertEqual(status, 2)
        self.assertIn("usage", stderr)

    def test_missing_subcommand(self):
        status, _, _ = self.run_command()
        self.assertEqual(status, 2)

    def test_psnr(self):
        rng = np.random.default_rng(0)
        reference = VideoVolume(rng.integers(16, 240, size=(2, 8, 8)).astype(float))
        write_video(self.path("a.gray"), reference)
        write_video(self.path("b.gray"), VideoVolume(reference.samples + 16.0))
        status, stdout, _ = self.run_command("psnr", "--reference", self.path("a.gray"), "--test",
                                             self.path("b.gray"), "--width", "8", "--height", "8")
        self.assertEqual(status, 0)
        self.assertAlmostEqual(self.last_json(stdout)["psnr_db"], 24.0484, places=4)

    def test_psnr_of_identical_files(self):
        write_video(self.path("a.gray"), VideoVolume.zeros(8, 8, 1))
        status, stdout, _ = self.run_command("psnr", "--reference", self.path("a.gray"), "--test",
                                             self.path("a.gray"), "--width", "8", "--height", "8")
        self.assertEqual(status, 0)
        self.assertEqual(self.last_json(stdout)["psnr_db"], "inf")

    def test_flow_dumps_every_pair(self):
        source = self.write_sequence("clip.gray", frames=4)
        output = self.path("flow")
        status, _, _ = self.run_command("flow", "--width", "32", "--height", "32", "--input", source,
                                        "--output", output, "--no-progress")
        self.assertEqual(status, 0)
        files = sorted(Path(output).glob("*.flow"))
        self.assertEqual([file.name for file in files],
                         ["pair_0000_0001.flow", "pair_0001_0002.flow", "pair_0002_0003.flow"])
        self.assertEqual(read_flow(files[0]).vx.shape, (32, 32))

    def test_bench_prints_table_and_writes_csv(self):
        csv_path = self.path("bench.csv")
        status, stdout, _ = self.run_command("bench", "--sequences", "synthetic:static", "--modes", "bilinear",
                                             "--seeds", "1,2", "--width", "16", "--height", "16", "--frames", "2",
                                             "--csv", csv_path, "--no-progress")
        self.assertEqual(status, 0)
        self.assertIn("synthetic:static", stdout)
        self.assertEqual(self.last_json(stdout)["cells"], 2)
        self.assertEqual(len(Path(csv_path).read_text().splitlines()), 3)

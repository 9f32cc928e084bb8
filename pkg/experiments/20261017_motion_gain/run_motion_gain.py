"""Motion gain on a translating texture: every mode, three masks, default parameters.

Run from the repository root:
    python experiments/20261017_motion_gain/run_motion_gain.py
"""
import logging.config
from pathlib import Path

from nrfse import settings
from nrfse.core.config import Mode, ReconstructionConfig
from nrfse.core.evaluation import BenchConfig, run_benchmark

logging.config.dictConfig(settings.LOGGING)

OUT_DIR = Path(__file__).resolve().parent

config = BenchConfig(
    sequences=("synthetic:translate", "synthetic:static"),
    reconstruction=ReconstructionConfig(width=128, height=128, frames=15),
    csv=OUT_DIR / "motion_gain.csv",
)
report = run_benchmark(config)
print(report.as_table())
report.to_csv(config.csv)

gain = report.average("synthetic:translate", Mode.FSE3D_MCW) - report.average("synthetic:translate", Mode.FSE3D)
print(f"\nmotion compensation gain on synthetic:translate: {gain:+.2f} dB")

"""
Settings for the nrfse project.

Defaults follow the reconstruction setup the method was evaluated with:
4 x 4 (x 1) blocks, a 14 pixel border, a 32 x 32 x 32 FFT, rho_hat = 0.7 and
gamma = delta = 0.5. Runtime knobs are read from the environment (or a .env file).
"""

import os

from dotenv import load_dotenv

load_dotenv()


# Frequency selective extrapolation

DEFAULT_BLOCK = (4, 4, 1)
DEFAULT_BORDER = 14
DEFAULT_FFT_SIZE = (32, 32, 32)
DEFAULT_RHO_HAT = 0.7
DEFAULT_GAMMA = 0.5
DEFAULT_DELTA = 0.5
DEFAULT_MAX_ITERATIONS = 100
DEFAULT_MIN_GAIN = 0.0
DEFAULT_TEMPORAL_WINDOW = 5


# Optical flow (Farneback)

DEFAULT_FLOW_LEVELS = 3
DEFAULT_FLOW_WINDOW_RADIUS = 7
DEFAULT_FLOW_ITERATIONS = 3
DEFAULT_FLOW_POLY_N = 5
DEFAULT_FLOW_POLY_SIGMA = 1.1
DEFAULT_FLOW_PYR_SCALE = 0.5


# Benchmark protocol: three differently sampled versions, first fifty frames

DEFAULT_SEEDS = (1, 2, 3)
DEFAULT_BENCH_FRAMES = 50
PEAK_VALUE = 255.0


# Runtime (NRFSE_WORKERS stays a string until ReconstructionConfig validates it)

WORKERS = os.getenv("NRFSE_WORKERS", "1")
SHOW_PROGRESS = os.getenv("NRFSE_PROGRESS", "1") not in ("0", "false", "False")
LOG_LEVEL = os.getenv("NRFSE_LOG_LEVEL", "INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
    },
    "loggers": {
        "nrfse": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
        },
    },
}

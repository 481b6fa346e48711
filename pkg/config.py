"""
Configuration for the deficiency toolkit.
Solver defaults are read once from deficiency_settings.json and exposed as
module-level constants. Only the archive URL and the log level can be
overridden from the environment (or a .env file).
"""
import json
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

SETTINGS_PATH = Path(__file__).with_name("deficiency_settings.json")

DEFAULTS = {
    "normalization_tol": 1e-9,
    "projection_tol": 1e-12,
    "projection_max_iter": 10000,
    "blackwell_tol": 1e-8,
    "ui_tol": 1e-7,
    "ui_max_iter": 50000,
    "ui_step_rule": "pairwise",
    "bottleneck_tol": 1e-9,
    "bottleneck_max_outer_iter": 5000,
    "bottleneck_restarts": 5,
    "beta_grid_size": 30,
    "beta_min": 1e-4,
    "beta_max": 1.0,
    "archive_url": "sqlite:///deficiency_runs.db",
    "timezone": "UTC",
    "log_level": "WARNING",
}


def load_settings(path=SETTINGS_PATH):
    """Load settings from the JSON file, falling back to the defaults for missing keys"""
    settings = dict(DEFAULTS)
    path = Path(path)
    if path.exists():
        with open(path, "r") as f:
            settings.update(json.load(f))
    return settings


_settings = load_settings()

# Probability objects
NORMALIZATION_TOL = float(_settings["normalization_tol"])

# Projection / deficiency
PROJECTION_TOL = float(_settings["projection_tol"])
PROJECTION_MAX_ITER = int(_settings["projection_max_iter"])
BLACKWELL_TOL = float(_settings["blackwell_tol"])

# Unique information
UI_TOL = float(_settings["ui_tol"])
UI_MAX_ITER = int(_settings["ui_max_iter"])
UI_STEP_RULE = str(_settings["ui_step_rule"])

# Bottleneck solvers
BOTTLENECK_TOL = float(_settings["bottleneck_tol"])
BOTTLENECK_MAX_OUTER_ITER = int(_settings["bottleneck_max_outer_iter"])
BOTTLENECK_RESTARTS = int(_settings["bottleneck_restarts"])
BETA_GRID_SIZE = int(_settings["beta_grid_size"])
BETA_MIN = float(_settings["beta_min"])
BETA_MAX = float(_settings["beta_max"])

# Run archive
ARCHIVE_URL = os.environ.get("DEFICIENCY_ARCHIVE_URL", _settings["archive_url"])
TIMEZONE = _settings["timezone"]

LOG_LEVEL = os.environ.get("DEFICIENCY_LOG_LEVEL", _settings["log_level"])


def setup_logging(level=None):
    """Send log records to standard error, tagged with the emitting module"""
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("[%(name)s] %(levelname)s: %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel((level or LOG_LEVEL).upper())

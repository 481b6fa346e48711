import importlib
import json
import logging
from pathlib import Path

import config


def test_settings_file_overrides_defaults(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({"ui_tol": 1e-5, "ui_step_rule": "open_loop"}))
    settings = config.load_settings(path)
    assert settings["ui_tol"] == 1e-5
    assert settings["ui_step_rule"] == "open_loop"
    assert settings["projection_tol"] == config.DEFAULTS["projection_tol"]


def test_missing_settings_file_gives_defaults(tmp_path):
    assert config.load_settings(tmp_path / "absent.json") == config.DEFAULTS


def test_bundled_settings_are_complete():
    assert set(config.load_settings()) == set(config.DEFAULTS)
    assert config.NORMALIZATION_TOL == 1e-9


def test_setup_logging_tags_records(capsys):
    config.setup_logging("info")
    logging.getLogger("projection").info("projected %d rows", 3)
    err = capsys.readouterr().err
    assert "[projection] INFO: projected 3 rows" in err


def test_environment_cannot_swap_solver_settings(tmp_path, monkeypatch):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({"ui_tol": 0.5, "projection_tol": 0.5}))
    monkeypatch.setenv("DEFICIENCY_SETTINGS", str(path))
    importlib.reload(config)
    assert config.SETTINGS_PATH == Path(config.__file__).with_name("deficiency_settings.json")
    assert config.UI_TOL == config.DEFAULTS["ui_tol"]
    assert config.PROJECTION_TOL == config.DEFAULTS["projection_tol"]

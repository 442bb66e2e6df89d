"""Tests for the settings layer, run configuration and loggers."""

import json
import logging

import pytest

from src.primary import settings_manager
from src.primary.config import RunConfig, build_run_config
from src.primary.errors import ConfigurationError
from src.primary.utils import logger as log_module


def test_defaults_are_shipped():
    assert settings_manager.get_setting("general", "port") == 9705
    assert settings_manager.get_setting("run", "mask_mode") == "none"
    assert settings_manager.get_setting("run", "missing", "fallback") == "fallback"


def test_user_file_overrides_key_by_key(tmp_path):
    settings_dir = settings_manager.get_settings_dir()
    settings_dir.mkdir(parents=True, exist_ok=True)
    (settings_dir / "run.json").write_text(json.dumps({"k_s": 0.42}))
    settings = settings_manager.load_settings("run", use_cache=False)
    assert settings["k_s"] == 0.42
    assert settings["t_reg"] == 0.1


def test_save_settings_is_read_back_and_clears_the_cache():
    assert settings_manager.get_setting("general", "jobs") == 1
    assert settings_manager.save_settings("general", {"jobs": 4})
    assert settings_manager.get_setting("general", "jobs") == 4
    assert settings_manager.get_advanced_setting("jobs") == 4
    assert not settings_manager.save_settings("nonsense", {})


def test_corrupt_user_file_falls_back_to_defaults():
    settings_dir = settings_manager.get_settings_dir()
    settings_dir.mkdir(parents=True, exist_ok=True)
    (settings_dir / "general.json").write_text("{broken")
    assert settings_manager.load_settings("general", use_cache=False)["port"] == 9705


def test_shipped_run_settings_build_without_overrides():
    config = build_run_config()
    assert config.mask_mode == "none"
    assert config.static_mask_path is None
    assert RunConfig().mask_mode == "none"


def test_build_run_config_merges_overrides():
    config = build_run_config(mask_mode="none", k_s=None, jobs=3, dump_frames=[["a", 1]])
    assert config.mask_mode == "none"
    assert config.k_s == 0.2
    assert config.jobs == 3
    assert config.dump_frames == (("a", 1),)
    assert config.to_dict()["dump_frames"] == [["a", 1]]
    with pytest.raises(ConfigurationError):
        build_run_config(mask_mode="none", colour="red")


@pytest.mark.parametrize("kwargs", [
    {"mask_mode": "sometimes"},
    {"mask_mode": "none", "engine": "gpu"},
    {"mask_mode": "none", "k_s": 0.0},
    {"mask_mode": "none", "k_s": 1.5},
    {"mask_mode": "none", "t_reg": 1.0},
    {"mask_mode": "none", "theta": -1.0},
    {"mask_mode": "none", "jobs": 0},
    {"mask_mode": "combined"},
])
def test_run_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        RunConfig(**kwargs)


def test_component_loggers():
    pipeline = log_module.get_logger("pipeline")
    assert pipeline.name == "sdmask.pipeline"
    assert log_module.get_logger("pipeline") is pipeline
    assert log_module.get_logger("unknown-part").name == "sdmask"


def test_update_logging_levels():
    pipeline = log_module.get_logger("pipeline")
    assert log_module.update_logging_levels(True) is True
    assert pipeline.level == logging.DEBUG
    assert all(handler.level == logging.DEBUG for handler in pipeline.handlers)
    assert log_module.update_logging_levels(False) is False
    assert pipeline.level == logging.INFO


def test_log_directory_from_environment(tmp_path, monkeypatch):
    assert log_module.get_log_dir() is None
    monkeypatch.setenv("SDMASK_LOG_DIR", str(tmp_path / "logs"))
    assert log_module.get_log_dir() == tmp_path / "logs"
    assert (tmp_path / "logs").is_dir()

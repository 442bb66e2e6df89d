#!/usr/bin/env python3
"""
Settings manager for SDMASK
Handles loading, saving, and providing settings from individual JSON files per config type.
User files in the settings directory are merged key-by-key over the shipped defaults.
"""

import os
import json
import pathlib
import logging
import time
from typing import Dict, Any, Optional

settings_logger = logging.getLogger("sdmask.settings_manager")

DEFAULT_CONFIGS_DIR = os.path.abspath(
    os.path.join(os.path.dirname(__file__), "default_configs")
)

KNOWN_CONFIG_TYPES = ["general", "run", "coefficients", "yolo_kp", "mgnet"]

# Format: {config_name: {'timestamp': timestamp, 'data': settings_dict}}
settings_cache: Dict[str, Dict[str, Any]] = {}
CACHE_TTL = 5  # seconds


def get_settings_dir() -> pathlib.Path:
    """Directory holding user overrides; `$SDMASK_CONFIG_DIR` or ./config."""
    return pathlib.Path(os.environ.get("SDMASK_CONFIG_DIR", "config"))


def clear_cache(config_name=None):
    """Clear the settings cache for a specific config or all configs."""
    global settings_cache
    if config_name:
        if config_name in settings_cache:
            settings_logger.debug(f"Clearing cache for {config_name}")
            settings_cache.pop(config_name, None)
    else:
        settings_logger.debug("Clearing entire settings cache")
        settings_cache = {}


def get_settings_file_path(config_name: str) -> pathlib.Path:
    """Get the path to the user settings file for a config type."""
    if config_name not in KNOWN_CONFIG_TYPES:
        settings_logger.warning(f"Requested settings file for unknown config type: {config_name}")
    return get_settings_dir() / f"{config_name}.json"


def get_default_config_path(config_name: str) -> pathlib.Path:
    """Get the path to the shipped default config file."""
    return pathlib.Path(DEFAULT_CONFIGS_DIR) / f"{config_name}.json"


def load_default_settings(config_name: str) -> Dict[str, Any]:
    """Load the shipped defaults for a config type."""
    default_file = get_default_config_path(config_name)
    if not default_file.exists():
        settings_logger.warning(f"Default settings file not found for {config_name}: {default_file}")
        return {}
    try:
        with open(default_file, "r") as f:
            return json.load(f)
    except Exception as e:
        settings_logger.error(f"Error loading default settings for {config_name} from {default_file}: {e}")
        return {}


def load_settings(config_name: str, use_cache: bool = True) -> Dict[str, Any]:
    """
    Load settings for a config type

    Args:
        config_name: The config type to load
        use_cache: Whether to use the cached settings if available and recent

    Returns:
        Dict containing the defaults overlaid with the user's file
    """
    if use_cache and config_name in settings_cache:
        cache_entry = settings_cache[config_name]
        cache_age = time.time() - cache_entry.get("timestamp", 0)
        if cache_age < CACHE_TTL:
            return cache_entry["data"]
        settings_logger.debug(f"Cache expired for {config_name} (age: {cache_age:.1f}s)")

    current_settings = load_default_settings(config_name)
    settings_file = get_settings_file_path(config_name)
    if settings_file.exists():
        try:
            with open(settings_file, "r") as f:
                user_settings = json.load(f)
            current_settings.update(user_settings)
        except json.JSONDecodeError:
            settings_logger.error(f"Error decoding JSON from {settings_file}. Using defaults.")
        except Exception as e:
            settings_logger.error(f"Error loading settings for {config_name} from {settings_file}: {e}")

    settings_cache[config_name] = {"timestamp": time.time(), "data": current_settings}
    return current_settings


def save_settings(config_name: str, settings_data: Dict[str, Any]) -> bool:
    """Save user settings for a config type."""
    if config_name not in KNOWN_CONFIG_TYPES:
        settings_logger.error(f"Attempted to save settings for unknown config type: {config_name}")
        return False

    settings_file = get_settings_file_path(config_name)
    try:
        settings_file.parent.mkdir(parents=True, exist_ok=True)
        temp_file = settings_file.with_suffix(".json.tmp")
        with open(temp_file, "w") as f:
            json.dump(settings_data, f, indent=2)
            f.flush()
            os.fsync(f.fileno())
        os.replace(temp_file, settings_file)
        settings_logger.info(f"Settings saved successfully for {config_name} to {settings_file}")
        clear_cache(config_name)
        return True
    except Exception as e:
        settings_logger.error(f"Error saving settings for {config_name} to {settings_file}: {e}")
        return False


def get_setting(config_name: str, key: str, default: Optional[Any] = None) -> Any:
    """Get a specific setting value."""
    return load_settings(config_name).get(key, default)


# Settings that live in general.json
ADVANCED_SETTINGS = [
    "debug_mode",
    "log_to_file",
    "jobs",
    "output_root",
    "host",
    "port",
]


def get_advanced_setting(setting_name, default_value=None):
    """
    Get an advanced setting from general settings.

    Args:
        setting_name: The name of the advanced setting to retrieve
        default_value: The default value to return if the setting is not found
    """
    if setting_name not in ADVANCED_SETTINGS:
        settings_logger.warning(f"Requested unknown advanced setting: {setting_name}")
    return load_settings("general").get(setting_name, default_value)

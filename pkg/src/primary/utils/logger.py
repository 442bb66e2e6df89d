#!/usr/bin/env python3
"""
Logging configuration for SDMASK
Supports separate log files for each pipeline component
"""

import logging
import sys
import os
import pathlib
from typing import Dict, Optional

# Components with their own log file
COMPONENT_LOG_FILES = {
    "pipeline": "pipeline.log",
    "masking": "masking.log",
    "network": "network.log",
    "metrics": "metrics.log",
    "server": "server.log",
}

MAIN_LOG_FILE_NAME = "sdmask.log"

# Global logger instances
logger: Optional[logging.Logger] = None
component_loggers: Dict[str, logging.Logger] = {}


def get_log_dir() -> Optional[pathlib.Path]:
    """Return the log directory, or None when logging to console only."""
    env_dir = os.environ.get("SDMASK_LOG_DIR")
    if env_dir:
        log_dir = pathlib.Path(env_dir)
    else:
        try:
            from src.primary.settings_manager import get_advanced_setting, get_settings_dir

            if not get_advanced_setting("log_to_file", False):
                return None
            log_dir = get_settings_dir() / "logs"
        except (ImportError, AttributeError):
            return None
    try:
        log_dir.mkdir(parents=True, exist_ok=True)
    except OSError:
        return None
    return log_dir


def _resolve_debug_mode(debug_mode=None) -> bool:
    if debug_mode is not None:
        return bool(debug_mode)
    if os.environ.get("DEBUG", "false").lower() == "true":
        return True
    try:
        from src.primary.config import get_debug_mode

        return get_debug_mode()
    except (ImportError, AttributeError):
        return False


def _attach_handlers(target: logging.Logger, name: str, log_file: Optional[pathlib.Path], level: int) -> None:
    # Reset handlers each time setup is called to avoid duplicates
    for handler in target.handlers[:]:
        target.removeHandler(handler)
        handler.close()

    log_format = f"%(asctime)s - {name} - %(levelname)s - %(message)s"
    formatter = logging.Formatter(log_format, datefmt="%Y-%m-%d %H:%M:%S")

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    target.addHandler(console_handler)

    if log_file is not None:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        target.addHandler(file_handler)


def setup_main_logger(debug_mode=None):
    """Set up the main SDMASK logger."""
    global logger
    use_debug_mode = _resolve_debug_mode(debug_mode)
    level = logging.DEBUG if use_debug_mode else logging.INFO

    current_logger = logging.getLogger("sdmask")
    current_logger.propagate = False
    current_logger.setLevel(level)

    log_dir = get_log_dir()
    log_file = log_dir / MAIN_LOG_FILE_NAME if log_dir else None
    _attach_handlers(current_logger, "sdmask", log_file, level)

    if use_debug_mode:
        current_logger.debug("Debug logging enabled for main logger")

    logger = current_logger
    return current_logger


def get_logger(component: str) -> logging.Logger:
    """
    Get or create a logger for a specific component.

    Args:
        component: The component name (e.g., 'pipeline', 'masking').

    Returns:
        A logger specific to the component, or the main logger if the name is unknown.
    """
    if component not in COMPONENT_LOG_FILES:
        global logger
        if logger is None:
            setup_main_logger()
        assert logger is not None
        return logger

    log_name = f"sdmask.{component}"
    if log_name in component_loggers:
        return component_loggers[log_name]

    component_logger = logging.getLogger(log_name)
    component_logger.propagate = False

    debug_mode = _resolve_debug_mode()
    level = logging.DEBUG if debug_mode else logging.INFO
    component_logger.setLevel(level)

    log_dir = get_log_dir()
    log_file = log_dir / COMPONENT_LOG_FILES[component] if log_dir else None
    _attach_handlers(component_logger, log_name, log_file, level)

    component_loggers[log_name] = component_logger

    if debug_mode:
        component_logger.debug(f"Debug logging enabled for {component} logger")

    return component_logger


def update_logging_levels(debug_mode=None):
    """
    Update all logger levels based on the current debug mode setting.

    Args:
        debug_mode: Force a specific debug mode, or None to read from settings
    """
    debug_mode = _resolve_debug_mode(debug_mode)
    level = logging.DEBUG if debug_mode else logging.INFO

    if logger:
        logger.setLevel(level)
        for handler in logger.handlers:
            handler.setLevel(level)

    for component_logger in component_loggers.values():
        component_logger.setLevel(level)
        for handler in component_logger.handlers:
            handler.setLevel(level)

    return debug_mode


def debug_log(message: str, data: object = None, component: Optional[str] = None) -> None:
    """
    Log debug messages with optional data.

    Args:
        message: The message to log.
        data: Optional data to include with the message.
        component: Optional component to log to a specific component's log file.
    """
    current_logger = get_logger(component) if component else get_logger("main")

    if current_logger.isEnabledFor(logging.DEBUG):
        current_logger.debug(message)
        if data is not None:
            try:
                import json

                as_json = json.dumps(data)
            except (TypeError, ValueError):
                as_json = str(data)
            if len(as_json) > 500:
                as_json = as_json[:500] + "..."
            current_logger.debug(as_json)

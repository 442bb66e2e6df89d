#!/usr/bin/env python3
"""
Configuration module for SDMASK
Builds typed run configuration from settings_manager defaults plus command-line
overrides, and logs the effective configuration.
"""

from dataclasses import dataclass, field, asdict
from typing import Any, Dict, Optional

from src.primary import settings_manager
from src.primary.errors import ConfigurationError

MASK_MODES = ("none", "static", "dynamic", "combined")
ENGINES = ("sdnn", "ann")


def get_debug_mode():
    """Get the debug mode setting from general settings"""
    try:
        return settings_manager.get_setting("general", "debug_mode", False)
    except Exception:
        return False


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs besides the manifest and weights."""

    mask_mode: str = "none"
    k_s: float = 0.2
    t_reg: float = 0.1
    region_size: int = 16
    conf_thresh: float = 0.25
    nms_iou: float = 0.5
    engine: str = "sdnn"
    theta: Optional[float] = None
    input_theta: Optional[float] = None
    coeff_path: Optional[str] = None
    static_mask_path: Optional[str] = None
    out_dir: str = "runs/latest"
    seed: int = 0
    jobs: int = 1
    dump_frames: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.mask_mode not in MASK_MODES:
            raise ConfigurationError(f"mask mode must be one of {MASK_MODES}, got {self.mask_mode!r}")
        if self.engine not in ENGINES:
            raise ConfigurationError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if not 0.0 < self.k_s <= 1.0:
            raise ConfigurationError(f"k_s must lie in (0, 1], got {self.k_s}")
        if not 0.0 < self.t_reg < 1.0:
            raise ConfigurationError(f"t_reg must lie in (0, 1), got {self.t_reg}")
        if self.region_size <= 0:
            raise ConfigurationError(f"region size must be positive, got {self.region_size}")
        if self.theta is not None and self.theta < 0:
            raise ConfigurationError(f"theta must be nonnegative, got {self.theta}")
        if self.input_theta is not None and self.input_theta < 0:
            raise ConfigurationError(f"input theta must be nonnegative, got {self.input_theta}")
        if self.jobs < 1:
            raise ConfigurationError(f"jobs must be at least 1, got {self.jobs}")
        if self.mask_mode in ("static", "combined") and not self.static_mask_path:
            raise ConfigurationError(f"mask mode {self.mask_mode!r} needs a static mask artifact")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["dump_frames"] = [list(item) for item in self.dump_frames]
        return data


def build_run_config(**overrides) -> RunConfig:
    """Merge the `run` settings with explicit overrides; None means 'not given'."""
    settings = dict(settings_manager.load_settings("run"))
    known = RunConfig.__dataclass_fields__.keys()
    values = {key: settings[key] for key in known if key in settings}
    for key, value in overrides.items():
        if key not in known:
            raise ConfigurationError(f"unknown run option: {key}")
        if value is not None:
            values[key] = value
    if "dump_frames" in values:
        values["dump_frames"] = tuple(tuple(item) for item in values["dump_frames"])
    return RunConfig(**values)


def log_configuration(run_config: RunConfig) -> None:
    """Log the effective run configuration."""
    from src.primary.utils.logger import get_logger

    log = get_logger("pipeline")
    log.info("--- Run configuration ---")
    log.info(f"Mask Mode: {run_config.mask_mode}")
    log.info(f"Engine: {run_config.engine}")
    if run_config.mask_mode in ("static", "combined"):
        log.info(f"Static Mask: {run_config.static_mask_path}")
    if run_config.mask_mode in ("dynamic", "combined"):
        log.info(f"Region Threshold (t_reg): {run_config.t_reg}")
    log.info(f"Region Size: {run_config.region_size}")
    log.info(f"Theta Override: {run_config.theta}")
    log.info(f"Input Theta Override: {run_config.input_theta}")
    log.info(f"Coefficients: {run_config.coeff_path or 'calibrated defaults'}")
    log.info(f"Workers: {run_config.jobs}")
    log.info(f"Output Directory: {run_config.out_dir}")
    log.info("--- End run configuration ---")

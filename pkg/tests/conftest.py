"""
Shared fixtures: isolated settings, a toy detector config and a small
on-disk dataset of synthetic PPM frames
"""

import numpy as np
import pytest

from src.primary import settings_manager
from src.primary.network.config import parse_config
from tests.helpers import make_frame, toy_config_dict, write_dataset


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Point user settings at an empty directory so only the shipped defaults apply."""
    monkeypatch.setenv("SDMASK_CONFIG_DIR", str(tmp_path / "config"))
    monkeypatch.delenv("SDMASK_LOG_DIR", raising=False)
    settings_manager.clear_cache()
    yield
    settings_manager.clear_cache()


@pytest.fixture
def toy_net():
    return parse_config(toy_config_dict())


@pytest.fixture
def small_dataset(tmp_path):
    """Two sequences of three 448x448 frames; the second sequence is static."""
    base = make_frame(1)
    moving = [base, np.roll(base, 4, axis=2), np.roll(base, 8, axis=2)]
    still = [make_frame(2)] * 3
    boxes = {
        "moving": [[[32, 32, 96, 96, 0]]] * 3,
        "still": [[[200, 200, 260, 300, 0]]] * 3,
    }
    return write_dataset(tmp_path / "data", {"moving": moving, "still": still}, boxes=boxes)

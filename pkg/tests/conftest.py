"""
Shared fixtures: tiny grid / reacher datasets and small model configurations.
"""
import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../src")))

import pytest
import torch

from compile_imitation.data.dataset import generate_records
from compile_imitation.envs.grid import GridConfig
from compile_imitation.models.config import CompILEConfig

SMALL_GRID = GridConfig(size=6, num_object_types=4)


def pytest_collection_modifyitems(config, items):
    if os.environ.get("COMPILE_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="scaled run; set COMPILE_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def small_grid():
    return SMALL_GRID


@pytest.fixture(scope="session")
def grid_records():
    """16 two-task pick-up episodes on the 6x6 / 4-type grid."""
    return generate_records("grid", 16, 2, "pickup", master_seed=0, cap=42, config=SMALL_GRID)


@pytest.fixture(scope="session")
def full_grid_records():
    """4 three-task pick-up episodes on the default 10x10 grid."""
    return generate_records("grid", 4, 3, "pickup", master_seed=100, cap=42)


@pytest.fixture(scope="session")
def reacher_records():
    return generate_records("reacher", 4, 3, "reach", master_seed=7, cap=100)


def make_config(env="grid", obs_shape=(6, 6, 12), **overrides):
    """Small CompILEConfig for fast tests."""
    settings = dict(num_segments=2, num_latents=3, hidden=16)
    settings.update(overrides)
    return CompILEConfig.for_env(env, obs_shape, **settings)


@pytest.fixture
def tiny_config():
    return make_config()


@pytest.fixture(autouse=True)
def _seed_torch():
    torch.manual_seed(0)
    yield

"""
Constants shared across environments, models and training for compile-imitation.

Defines environment dimensions, demonstration caps, model defaults and the
numeric guards used by the relaxed segmentation machinery.
"""

# constants.py

from typing import Dict, Tuple

# -------------------------------------------------------------------
# 1) Grid world
# -------------------------------------------------------------------
GRID_SIZE: int = 10
NUM_OBJECT_TYPES: int = 10
NUM_OBJECTS: int = 6
WALL_KEEP_RATE: float = 0.2
# 10 object-type channels, walls, player
GRID_CHANNELS: int = NUM_OBJECT_TYPES + 2
WALL_CHANNEL: int = NUM_OBJECT_TYPES
PLAYER_CHANNEL: int = NUM_OBJECT_TYPES + 1
NUM_GRID_ACTIONS: int = 8

# Direction order used by actions and BFS expansion: N, E, S, W
DIRECTIONS: Tuple[Tuple[int, int], ...] = ((-1, 0), (0, 1), (1, 0), (0, -1))

MAX_RESAMPLE_ATTEMPTS: int = 100
TRAIN_DEMO_CAP: int = 42
TEST_DEMO_CAP: int = 200
ONLINE_STEP_LIMIT: int = 200

# -------------------------------------------------------------------
# 2) Reacher
# -------------------------------------------------------------------
LINK_LENGTH: float = 0.12
TARGET_DIAMETER: float = 0.05
REACH_RADIUS: float = TARGET_DIAMETER / 2
TARGET_RADIUS_RANGE: Tuple[float, float] = (0.05, 0.2)
MAX_ANGULAR_VELOCITY: float = 5.0
CONTROL_DT: float = 0.06
REACHER_STEP_LIMIT: int = 100
REACHER_MAX_OBJECTS: int = 6
REACHER_OBS_DIM: int = 3 * NUM_OBJECT_TYPES + 2

# Scripted controller dead-bands
RADIUS_DEADBAND: float = 0.005
ANGLE_DEADBAND: float = 0.05

# Per-joint command levels; 25 joint combinations form the discrete action set
COMMAND_LEVELS: Tuple[float, ...] = (-1.0, -0.25, 0.0, 0.25, 1.0)
NUM_REACHER_ACTIONS: int = len(COMMAND_LEVELS) ** 2

# -------------------------------------------------------------------
# 3) Model and training defaults
# -------------------------------------------------------------------
DEFAULT_HIDDEN: int = 256
DEFAULT_GAUSSIAN_DIM: int = 32
DEFAULT_TEMPERATURE: float = 1.0
DEFAULT_POISSON_RATE: float = 3.0
DEFAULT_BETA: float = 0.1
DEFAULT_LR: float = 1e-4
DEFAULT_BATCH: int = 256
TERMINATION_THRESHOLD: float = 0.5

# Logit assigned to illegal boundary positions (padding, b = 1)
ILLEGAL_LOGIT: float = -1e9
# Floor applied before taking logs of mixture weights / segment probabilities
LOG_FLOOR: float = 1e-30
GUMBEL_EPS: float = 1e-20

NUM_ACTIONS: Dict[str, int] = {
    "grid": NUM_GRID_ACTIONS,
    "reacher": NUM_REACHER_ACTIONS,
}

LOG_LEVELS: Dict[str, str] = {
    "info": "INFO",
    "debug": "DEBUG",
}

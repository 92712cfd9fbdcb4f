"""
Configuration dataclasses for CompILE models and training runs.
"""

import logging
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

from ..constants import (
    DEFAULT_BATCH,
    DEFAULT_BETA,
    DEFAULT_GAUSSIAN_DIM,
    DEFAULT_HIDDEN,
    DEFAULT_LR,
    DEFAULT_POISSON_RATE,
    DEFAULT_TEMPERATURE,
    NUM_ACTIONS,
)
from ..utils.error_helpers import ConfigError

logger = logging.getLogger(__name__)


class LatentKind(Enum):
    CATEGORICAL = "categorical"
    GAUSSIAN = "gaussian"


class Readout(Enum):
    """How a segment's z posterior reads the per-step head outputs."""

    LAST_STEP = "last-step"
    ATTENTIVE = "attentive"


class Supervision(Enum):
    NONE = "none"
    Z = "z"
    B = "b"


class SampleMode(Enum):
    """How latent samples are drawn in a forward pass.

    RELAXED: Gumbel-softmax / reparameterized samples (training).
    PROBS: posterior probabilities (Gaussian: the mean), no noise.
    HARD: exact categorical samples via Gumbel-max (Gaussian: a reparameterized sample).
    ARGMAX: one-hot argmax (Gaussian: the mean), used at evaluation.
    """

    RELAXED = "relaxed"
    PROBS = "probs"
    HARD = "hard"
    ARGMAX = "argmax"


class ModelKind(Enum):
    COMPILE = "compile"
    SURPRISAL = "surprisal"
    VAE_BC = "vae-bc"


@dataclass
class CompILEConfig:
    """CompILE hyperparameters.

    Attributes:
        num_segments (int): M, the maximum number of segments.
        num_latents (int): K, categories of the categorical latent.
        latent_kind (LatentKind): categorical or gaussian.
        temperature (float): Gumbel-softmax temperature tau.
        poisson_rate (float): lambda of the truncated Poisson boundary prior.
        beta (float): KL scale in [0, 1].
        hidden (int): Width of embeddings, RNNs and heads.
        readout (Readout): last-step or attentive z readout.
        supervision (Supervision): none, z or b.
        env (str): Environment tag ('grid' or 'reacher').
        num_actions (int): Size of the discrete action set.
        obs_shape (tuple): Observation shape of one step.
        z_dim (int): Width of the Gaussian latent.
        termination_weight (float): Weight of the termination BCE in the loss.
        policy_layers (int): Hidden layers of each policy head (0 = linear).
        sample_boundaries (bool): Sample relaxed boundaries (True) or feed posterior
            probabilities into the CDFs (False).
    """

    num_segments: int = 3
    num_latents: int = 10
    latent_kind: LatentKind = LatentKind.CATEGORICAL
    temperature: float = DEFAULT_TEMPERATURE
    poisson_rate: float = DEFAULT_POISSON_RATE
    beta: float = DEFAULT_BETA
    hidden: int = DEFAULT_HIDDEN
    readout: Readout = Readout.LAST_STEP
    supervision: Supervision = Supervision.NONE
    env: str = "grid"
    num_actions: int = NUM_ACTIONS["grid"]
    obs_shape: Tuple[int, ...] = (10, 10, 12)
    z_dim: int = DEFAULT_GAUSSIAN_DIM
    termination_weight: float = 1.0
    policy_layers: int = 1
    sample_boundaries: bool = True

    def __post_init__(self):
        self.latent_kind = LatentKind(self.latent_kind)
        self.readout = Readout(self.readout)
        self.supervision = Supervision(self.supervision)
        self.obs_shape = tuple(int(d) for d in self.obs_shape)

    @property
    def categorical(self) -> bool:
        return self.latent_kind == LatentKind.CATEGORICAL

    def validate(self) -> "CompILEConfig":
        """Check invariants and return self.

        Raises:
            ConfigError: On any violated invariant.
        """
        problems = []
        if self.num_segments < 1:
            problems.append(f"num_segments must be >= 1, got {self.num_segments}")
        if self.categorical and self.num_latents < 2:
            problems.append(f"num_latents must be >= 2, got {self.num_latents}")
        if not self.categorical and self.z_dim < 1:
            problems.append(f"z_dim must be >= 1, got {self.z_dim}")
        if self.temperature <= 0:
            problems.append(f"temperature must be > 0, got {self.temperature}")
        if self.poisson_rate <= 0:
            problems.append(f"poisson_rate must be > 0, got {self.poisson_rate}")
        if not 0.0 <= self.beta <= 1.0:
            problems.append(f"beta must be in [0, 1], got {self.beta}")
        if self.hidden < 1:
            problems.append(f"hidden must be >= 1, got {self.hidden}")
        if self.env not in NUM_ACTIONS:
            problems.append(f"unknown env '{self.env}'")
        elif self.num_actions != NUM_ACTIONS[self.env]:
            problems.append(f"env '{self.env}' has {NUM_ACTIONS[self.env]} actions, config says {self.num_actions}")
        if self.supervision == Supervision.Z and not self.categorical:
            problems.append("z supervision needs a categorical latent")
        if problems:
            raise ConfigError("Invalid CompILEConfig: " + "; ".join(problems))
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["latent_kind"] = self.latent_kind.value
        data["readout"] = self.readout.value
        data["supervision"] = self.supervision.value
        data["obs_shape"] = list(self.obs_shape)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CompILEConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown CompILEConfig keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def for_env(cls, env: str, obs_shape: Tuple[int, ...], **overrides) -> "CompILEConfig":
        """Config with the environment-dependent fields filled in."""
        if env not in NUM_ACTIONS:
            raise ConfigError(f"unknown env '{env}'")
        defaults = {"policy_layers": 1 if env == "grid" else 2}
        defaults.update(overrides)
        return cls(env=env, num_actions=NUM_ACTIONS[env], obs_shape=tuple(obs_shape), **defaults).validate()

    def replace(self, **changes) -> "CompILEConfig":
        return replace(self, **changes)


@dataclass
class TrainSettings:
    """Optimisation loop settings.

    Attributes:
        iterations (int): Number of Adam steps.
        batch_size (int): Episodes per mini-batch (capped at the dataset size).
        lr (float): Adam learning rate.
        seed (int): Seeds parameter init, batch sampling and Gumbel noise.
        checkpoint_every (int): Write a checkpoint every N iterations (0: only at the end).
        log_every (int): Log a loss line every N iterations.
        anneal_to (float, optional): Final temperature of a linear annealing schedule.
    """

    iterations: int = 1000
    batch_size: int = DEFAULT_BATCH
    lr: float = DEFAULT_LR
    seed: int = 0
    checkpoint_every: int = 0
    log_every: int = 100
    anneal_to: Optional[float] = None

    def validate(self) -> "TrainSettings":
        if self.iterations < 0:
            raise ConfigError(f"iterations must be >= 0, got {self.iterations}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.anneal_to is not None and self.anneal_to <= 0:
            raise ConfigError(f"anneal_to must be > 0, got {self.anneal_to}")
        return self

    def temperature_at(self, iteration: int, start: float) -> float:
        """Linearly annealed temperature for a 0-based iteration."""
        if self.anneal_to is None or self.iterations <= 1:
            return start
        frac = min(iteration / (self.iterations - 1), 1.0)
        return start + frac * (self.anneal_to - start)

# maipp/core/config.py

"""
Configuration models for every layer of the toolkit.

All configs are pydantic models so that experiment files can be validated
in one place and dumped back verbatim next to their results.
"""

import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator, model_validator


def parse_comm_range(value: Union[float, int, str, None]) -> float:
    """Accepts a positive number or ``inf``/``global``/``None`` for unlimited range."""
    if value is None:
        return math.inf
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "infinity", "global", "none"):
            return math.inf
        value = float(text)
    value = float(value)
    if not value > 0:
        raise ValueError(f"comm_range must be positive, got {value}")
    return value


class FieldConfig(BaseModel):
    """Parameters of the hidden ground-truth mixture."""
    min_components: int = 8
    max_components: int = 12
    std_min: float = 0.05
    std_max: float = 0.2
    weight_min: float = 0.5
    weight_max: float = 1.0
    resolution: int = 30
    noise_std: float = 0.1
    # Pins component means instead of drawing them; must match the count.
    fixed_means: Optional[List[Tuple[float, float]]] = None

    @model_validator(mode="after")
    def _check_ranges(self) -> "FieldConfig":
        if self.min_components < 1 or self.min_components > self.max_components:
            raise ValueError("component count range must satisfy 1 <= min <= max")
        if self.std_min <= 0 or self.std_min > self.std_max:
            raise ValueError("std range must satisfy 0 < min <= max")
        if self.weight_min <= 0 or self.weight_min > self.weight_max:
            raise ValueError("weight range must satisfy 0 < min <= max")
        if self.resolution < 1:
            raise ValueError("resolution must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if self.fixed_means is not None:
            if not self.min_components == self.max_components == len(self.fixed_means):
                raise ValueError("fixed_means requires min_components == max_components == len(fixed_means)")
            for mx, my in self.fixed_means:
                if not (0.0 <= mx <= 1.0 and 0.0 <= my <= 1.0):
                    raise ValueError("fixed_means must lie in [0,1]^2")
        return self


class GPHyperParams(BaseModel):
    """Matern 3/2 GP hyperparameters (fixed, never learned)."""
    lengthscale: float = Field(0.45, gt=0)
    signal_variance: float = Field(1.0, gt=0)
    noise_variance: float = Field(0.01, gt=0)
    jitter: float = Field(1e-8, ge=0)

    model_config = {"frozen": True}


class GraphConfig(BaseModel):
    """PRM waypoint graph size."""
    n: int = 200
    k: int = 20

    @model_validator(mode="after")
    def _check(self) -> "GraphConfig":
        if not self.n > self.k >= 1:
            raise ValueError(f"PRM requires n > k >= 1, got n={self.n}, k={self.k}")
        return self


class IntentConfig(BaseModel):
    min_cov_bound: float = Field(1e-3, gt=0)


class PolicyConfig(BaseModel):
    """Shape of the attention network."""
    d_model: int = Field(128, ge=1)
    n_layers: int = Field(4, ge=0)
    ff_hidden: int = Field(512, ge=1)
    k_eig: int = Field(32, ge=1)
    feature_dim: int = 5


class RRTConfig(BaseModel):
    step: float = Field(0.1, gt=0)
    max_candidates: int = Field(64, ge=1)
    min_candidates: int = Field(8, ge=1)
    max_iterations: int = Field(5000, ge=1)
    # Tr(P_f) over the full grid, or only over the high-interest cells.
    trace_scope: Literal["full", "interest"] = "full"


class EpisodeConfig(BaseModel):
    """One multi-agent episode."""
    m: int = Field(3, ge=1)
    budget: float = Field(3.0, gt=0)
    measurement_interval: float = Field(0.2, gt=0)
    comm_range: float = math.inf
    mu_th: float = Field(0.4, gt=0)
    beta: float = Field(1.0, gt=0)
    final_reward_scale: float = Field(0.02, ge=0)
    step_reward_scope: Literal["full", "interest"] = "full"
    # Portion of the selected RRT path executed before the next SGA round.
    sga_execute: float = Field(0.2, gt=0)
    record_curve: bool = True
    collect_transitions: bool = False
    random_start: bool = True

    @field_validator("comm_range", mode="before")
    @classmethod
    def _comm_range(cls, value):
        return parse_comm_range(value)


class TrainConfig(BaseModel):
    """PPO schedule and loss weights."""
    lr: float = Field(5e-5, gt=0)
    lr_decay: float = Field(0.96, gt=0)
    lr_decay_every: int = Field(32, ge=1)
    batch_size: int = Field(512, ge=1)
    ppo_epochs: int = Field(8, ge=1)
    clip_eps: float = 0.2
    gamma: float = Field(1.0, gt=0)
    gae_lambda: float = Field(0.95, gt=0)
    entropy_coef: float = Field(0.01, ge=0)
    value_coef: float = Field(0.5, ge=0)
    normalize_advantages: bool = True
    n_updates: int = Field(1000, ge=1)
    episodes_per_update: int = Field(8, ge=1)
    checkpoint_every: int = Field(50, ge=1)
    variant: str = "TI(8,5)"

    @field_validator("clip_eps")
    @classmethod
    def _clip(cls, value: float) -> float:
        if not 0.0 < value < 1.0 and not math.isinf(value):
            raise ValueError("clip_eps must lie in (0, 1)")
        return value


class OutputConfig(BaseModel):
    directory: Path = Path("results")
    results_csv: str = "results.csv"
    summary_csv: str = "summary.csv"
    training_log_csv: str = "training_log.csv"
    record_wall_time: bool = False


class ExperimentConfig(BaseModel):
    """Everything needed to reproduce a benchmark table or a training run."""
    field: FieldConfig = Field(default_factory=FieldConfig)
    gp: GPHyperParams = Field(default_factory=GPHyperParams)
    graph: GraphConfig = Field(default_factory=GraphConfig)
    intent: IntentConfig = Field(default_factory=IntentConfig)
    policy: PolicyConfig = Field(default_factory=PolicyConfig)
    rrt: RRTConfig = Field(default_factory=RRTConfig)
    episode: EpisodeConfig = Field(default_factory=EpisodeConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    methods: List[str] = Field(default_factory=lambda: ["RRT(0.3,0.4)"])
    budgets: List[float] = Field(default_factory=lambda: [3.0])
    comm_ranges: List[float] = Field(default_factory=lambda: [math.inf])
    instances: int = Field(30, ge=1)
    trials: int = Field(10, ge=1)
    seed: int = 0
    greedy: bool = False
    checkpoint: Optional[Path] = None

    @field_validator("comm_ranges", mode="before")
    @classmethod
    def _comm_ranges(cls, values):
        return [parse_comm_range(v) for v in values]

    @field_validator("budgets")
    @classmethod
    def _budgets(cls, values: List[float]) -> List[float]:
        if not values or any(b <= 0 for b in values):
            raise ValueError("budgets must be a non-empty list of positive values")
        return values

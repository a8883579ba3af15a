# maipp/train/rollouts.py

"""Experience collection with the stochastic shared policy."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from maipp.core.config import ExperimentConfig
from maipp.planners.learned import LearnedController
from maipp.planners.registry import parse_method
from maipp.policy.network import PolicyNet
from maipp.sim.episode import Transition, run_episode
from maipp.sim.instances import make_instance

# Set up logging
logger = logging.getLogger(__name__)


@dataclass
class RolloutBuffer:
    """
    Transitions of several episodes.

    ``segments`` holds, per episode and agent, the index range of that
    agent's transitions in decision order; advantages are computed per segment.
    """
    transitions: List[Transition] = field(default_factory=list)
    segments: List[Tuple[int, int]] = field(default_factory=list)
    episode_returns: List[float] = field(default_factory=list)
    episode_traces: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.transitions)

    def extend(self, transitions: List[Transition], m: int, episode_return: float, trace: float) -> None:
        for agent_id in range(m):
            own = [t for t in transitions if t.agent_id == agent_id]
            if own:
                start = len(self.transitions)
                self.transitions.extend(own)
                self.segments.append((start, len(self.transitions)))
        self.episode_returns.append(episode_return)
        self.episode_traces.append(trace)

    @property
    def mean_return(self) -> float:
        return float(np.mean(self.episode_returns)) if self.episode_returns else 0.0


def training_controller(net: PolicyNet, variant: str, training: bool = True) -> LearnedController:
    """Stochastic controller for a learned variant label such as ``TI(8,5)``."""
    spec = parse_method(variant)
    kind = None if spec.kind == "intent-free" else spec.kind
    a, j = (int(spec.params[0]), int(spec.params[1])) if spec.params else (8, 5)
    return LearnedController(net, kind, a, j, best_first_step=False, greedy=False, training=training)


def _episode(args) -> Tuple[List[Transition], int, float, float]:
    net, cfg, variant, seed = args
    episode_cfg = cfg.episode.model_copy(update={"collect_transitions": True, "record_curve": False})
    inst = make_instance(seed, 0, episode_cfg.m, cfg.field, cfg.graph, episode_cfg.random_start)
    metrics = run_episode(
        episode_cfg, inst.world, inst.graphs, np.random.default_rng(np.random.SeedSequence([seed, 2])),
        training_controller(net, variant), cfg.gp, cfg.field.noise_std,
    )
    return metrics.transitions, episode_cfg.m, float(np.mean(metrics.reward_sums)), metrics.trace_final


def collect_rollouts(
    net: PolicyNet,
    cfg: ExperimentConfig,
    episodes: int,
    rng: np.random.Generator,
    variant: Optional[str] = None,
    jobs: int = 1,
) -> RolloutBuffer:
    """
    Runs ``episodes`` fresh episodes with the stochastic policy.

    Every episode draws a new field, start and roadmaps from ``rng``. The
    network is only read; workers receive a copy.

    Returns:
        A RolloutBuffer with rewards filled in and each agent's last
        transition flagged done
    """
    variant = variant or cfg.train.variant
    seeds = [int(s) for s in rng.integers(0, 2**31 - 1, size=episodes)]
    args = [(net, cfg, variant, s) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_episode, args))
    else:
        results = [_episode(a) for a in args]
    buffer = RolloutBuffer()
    for transitions, m, ret, trace in results:
        buffer.extend(transitions, m, ret, trace)
    logger.debug(f"Collected {len(buffer)} transitions from {episodes} episodes")
    return buffer

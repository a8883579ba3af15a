# maipp/train/evaluate.py

"""Scoring planners on seeded benchmark instances."""

import logging
import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from maipp.core.config import ExperimentConfig
from maipp.core.errors import DomainError
from maipp.planners.registry import build_planner, parse_method
from maipp.policy.network import PolicyNet
from maipp.sim.episode import EpisodeMetrics, run_episode
from maipp.sim.instances import Instance, make_instance, trial_rng

# Set up logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrialResult:
    """One row of the results CSV."""
    instance: int
    trial: int
    method: str
    m: int
    B: float
    comm_range: float
    trace_final: float
    wall_ms: float


def run_trial(
    cfg: ExperimentConfig,
    method: str,
    instance_id: int,
    trial: int,
    budget: Optional[float] = None,
    comm_range: Optional[float] = None,
    net: Optional[PolicyNet] = None,
    instance: Optional[Instance] = None,
) -> Tuple[TrialResult, EpisodeMetrics]:
    """
    Runs one (instance, trial, method) cell of the benchmark grid.

    Every method sees the same field, start, roadmaps and episode seed for
    a given ``(instance_id, trial)``. Callers that already built the instance
    pass it as ``instance``.
    """
    budget = cfg.episode.budget if budget is None else budget
    comm_range = cfg.episode.comm_range if comm_range is None else comm_range
    episode_cfg = cfg.episode.model_copy(update={"budget": budget, "comm_range": comm_range})
    inst = instance
    if inst is None:
        inst = make_instance(cfg.seed, instance_id, episode_cfg.m, cfg.field, cfg.graph, episode_cfg.random_start)
    if inst.id != instance_id or len(inst.graphs) != episode_cfg.m:
        raise DomainError(f"instance {inst.id} with {len(inst.graphs)} roadmaps does not fit cell {instance_id}")
    planner = build_planner(method, cfg, net)
    started = time.perf_counter()
    metrics = run_episode(
        episode_cfg, inst.world, inst.graphs, trial_rng(cfg.seed, instance_id, trial),
        planner, cfg.gp, cfg.field.noise_std,
    )
    wall_ms = (time.perf_counter() - started) * 1000.0 if cfg.output.record_wall_time else 0.0
    result = TrialResult(
        instance=instance_id, trial=trial, method=parse_method(method).label, m=episode_cfg.m,
        B=budget, comm_range=comm_range, trace_final=metrics.trace_final, wall_ms=wall_ms,
    )
    return result, metrics


@dataclass
class VariantScore:
    method: str
    mean: float
    std: float
    traces: List[float]


def evaluate_variant(
    net: Optional[PolicyNet],
    variant: str,
    cfg: ExperimentConfig,
    instances: Optional[int] = None,
    trials: Optional[int] = None,
) -> VariantScore:
    """
    Mean and standard deviation of the final trace over ``instances x trials``.

    Args:
        net: Policy for learned variants; unused by ``random`` and ``RRT(a,b)``
        variant: Method label, e.g. ``TI(8,5)*`` or ``intent-free``
        cfg: Experiment settings; ``cfg.greedy`` selects argmax actions
        instances: Overrides ``cfg.instances``
        trials: Overrides ``cfg.trials``
    """
    n_inst = cfg.instances if instances is None else instances
    n_trials = cfg.trials if trials is None else trials
    traces = []
    for i in range(n_inst):
        for t in range(n_trials):
            result, _ = run_trial(cfg, variant, i, t, net=net)
            traces.append(result.trace_final)
    arr = np.asarray(traces)
    score = VariantScore(parse_method(variant).label, float(arr.mean()), float(arr.std()), traces)
    logger.info(f"{score.method}: Tr(P_f) {score.mean:.2f} +/- {score.std:.2f} over {len(traces)} episodes")
    return score

# maipp/planners/sga.py

"""Sequential greedy assignment over RRT candidates."""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Set, Tuple

import numpy as np

from maipp.core.belief import BeliefState
from maipp.core.config import RRTConfig
from maipp.core.geometry import as_points, truncate
from maipp.planners.rrt import CandidatePath, evaluate_path, grow_rrt
from maipp.sim.agent import AgentState

# Set up logging
logger = logging.getLogger(__name__)

CandidateFn = Callable[[AgentState, Tuple[float, float]], List[CandidatePath]]

_EPS = 1e-9


def horizon_for(remaining: float, a: float, b: float, floor: float = 0.0) -> Tuple[float, float]:
    """
    Horizon window an agent can still afford.

    With at least ``a`` left the window is ``[a, min(b, remaining)]``;
    below that it falls back to ``[min(remaining, a/2), remaining]``. While
    the window's upper end exceeds ``floor`` (the portion executed per round)
    the lower end is raised to ``floor``, so only the final stretch of an
    agent's budget can be shorter than one execution portion.
    """
    if remaining > a + _EPS:
        lo, hi = a, min(b, remaining)
    else:
        lo, hi = min(remaining, 0.5 * a), remaining
        if lo >= remaining - _EPS:
            lo = 0.5 * remaining
    if hi > floor + _EPS:
        lo = max(lo, floor)
    return lo, hi


def rrt_config_for(cfg: RRTConfig, horizon: Tuple[float, float]) -> RRTConfig:
    """Shrinks the tree step when the window ends below it."""
    if horizon[1] < cfg.step:
        return cfg.model_copy(update={"step": horizon[1]})
    return cfg


def execution_portion(path: CandidatePath, remaining: float, execute: float = 0.2) -> np.ndarray:
    """The prefix of ``path`` an agent travels before the next round."""
    length = min(execute, remaining, path.length)
    return as_points(truncate(path.waypoints, length))


def sga_round(
    agents: Sequence[AgentState],
    beliefs: Sequence[BeliefState],
    visibility: Sequence[Set[int]],
    horizon: Tuple[float, float],
    rngs: Sequence[np.random.Generator],
    cfg: RRTConfig = RRTConfig(),
    spacing: float = 0.2,
    interest_sets: Optional[Sequence[np.ndarray]] = None,
    candidate_fn: Optional[CandidateFn] = None,
    execute: float = 0.2,
) -> List[Optional[CandidatePath]]:
    """
    One planning round: agents choose in id order, each conditioned on its predecessors.

    Args:
        agents: Agents sorted by id
        beliefs: Each agent's merged belief
        visibility: Ids each agent can hear this round
        horizon: The method's ``(a, b)`` window
        rngs: Per-agent tree sampling streams
        cfg: RRT growth parameters
        spacing: Travel between virtual measurements
        interest_sets: Per-agent grid cells the trace is restricted to, when
            the planner scores over the high-interest set only
        candidate_fn: Replaces RRT growth, mostly for tests
        execute: Travel executed per round; windows never drop below it
            while the budget allows more

    Returns:
        Per agent, the chosen full candidate with its predicted trace, or
        None for an agent with no budget left
    """
    a, b = horizon
    chosen: List[Optional[CandidatePath]] = [None] * len(agents)
    for i, agent in enumerate(agents):
        if agent.halted or agent.remaining_budget <= _EPS:
            continue
        window = horizon_for(agent.remaining_budget, a, b, execute)
        if candidate_fn is not None:
            candidates = candidate_fn(agent, window)
        else:
            candidates = grow_rrt(agent.position, window, rngs[i], rrt_config_for(cfg, window))
        conditioning = [chosen[k] for k in range(i) if chosen[k] is not None and agents[k].id in visibility[i]]
        interest = None if interest_sets is None else interest_sets[i]
        scores = np.array([
            evaluate_path(c, beliefs[i], conditioning, spacing, agent.odometer, interest) for c in candidates
        ])
        best = int(np.argmin(scores))
        chosen[i] = candidates[best].with_trace(scores[best])
        logger.debug(
            f"Agent {agent.id} picked candidate {best}/{len(candidates)} "
            f"(length {candidates[best].length:.3f}, trace {scores[best]:.3f})"
        )
    return chosen


@dataclass
class SGAPlanner:
    """The SGA+RRT baseline, identified by its horizon label ``RRT(a,b)``."""
    a: float
    b: float
    cfg: RRTConfig = field(default_factory=RRTConfig)

    @property
    def name(self) -> str:
        return f"RRT({self.a:g},{self.b:g})"

    @property
    def horizon(self) -> Tuple[float, float]:
        return self.a, self.b

# maipp/core/intent.py

"""
Intent generation and fusion.

An agent predicts where it is heading by rolling its own stochastic policy
forward on a virtual copy of its belief, summarizes the visited nodes as a
bivariate Gaussian and broadcasts only ``[mean, cov]``. Receivers sum the
Gaussians of everyone in range and scale the result to peak at one.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.stats import multivariate_normal

from maipp.core.belief import BeliefState
from maipp.core.errors import DomainError
from maipp.core.geometry import as_points, sample_along
from maipp.core.models import IntentMessage
from maipp.core.roadmap import WaypointGraph
from maipp.policy.network import PolicyNet, RecurrentState
from maipp.policy.observation import build_observation, policy_step, select_action

# Set up logging
logger = logging.getLogger(__name__)

MIN_COV_BOUND = 1e-3
DEFAULT_DI = (8, 3)
DEFAULT_TI = (8, 5)


@dataclass
class RolloutContext:
    """What an agent knows at its decision instant, frozen for the rollouts."""
    graph: WaypointGraph
    belief: BeliefState
    intent_levels: np.ndarray
    pe: np.ndarray
    mu_th: float
    measurement_interval: float = 0.2


@dataclass
class SampledTrajectory:
    """
    One virtual rollout.

    ``nodes`` and ``points`` exclude the start node, so the intent estimators
    see only predicted future positions; ``path`` and ``path_points`` begin at
    the start. ``first_action`` is the position of ``nodes[0]`` in the start
    node's neighbor list.
    """
    start: int
    nodes: List[int]
    points: np.ndarray
    virtual_locations: np.ndarray
    trace_reduction: float
    first_action: int
    truncated: bool = False
    start_point: Optional[np.ndarray] = None

    @property
    def end_point(self) -> np.ndarray:
        return self.points[-1]

    @property
    def path(self) -> List[int]:
        return [self.start] + self.nodes

    @property
    def path_points(self) -> np.ndarray:
        if self.start_point is None:
            return self.points
        return np.vstack([self.start_point, self.points])


@dataclass
class SampledTrajectorySet:
    trajectories: List[SampledTrajectory] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def end_points(self) -> np.ndarray:
        return as_points([t.end_point for t in self.trajectories])

    def all_points(self) -> np.ndarray:
        return as_points(np.vstack([t.points for t in self.trajectories])) if self.trajectories else np.zeros((0, 2))

    def best(self) -> SampledTrajectory:
        """The rollout with the largest virtual trace reduction; earliest wins ties."""
        if not self.trajectories:
            raise DomainError("no trajectories were sampled")
        gains = [t.trace_reduction for t in self.trajectories]
        return self.trajectories[int(np.argmax(gains))]


def sample_trajectories(
    net: PolicyNet,
    ctx: RolloutContext,
    current: int,
    remaining_budget: float,
    state: RecurrentState,
    a: int,
    j: int,
    rng: np.random.Generator,
    greedy: bool = False,
    odometer: float = 0.0,
) -> SampledTrajectorySet:
    """
    Rolls the policy forward ``j`` steps, ``a`` times, on a virtual belief.

    Other agents' intents stay frozen at ``ctx.intent_levels``. After every
    virtual move the agent "measures" every ``ctx.measurement_interval`` of
    travel, which shrinks the variance feature of later steps.

    Args:
        net: Shared policy network
        ctx: Frozen decision-time knowledge
        current: Node the agent stands on
        remaining_budget: Budget left before the rollout
        state: The agent's recurrent state, copied for each rollout
        a: Number of trajectories
        j: Nodes per trajectory
        rng: Source of action samples
        greedy: Take argmax actions instead of sampling
        odometer: Distance travelled since the agent's last real measurement

    Returns:
        A SampledTrajectorySet; trajectories cut short by the budget are flagged
    """
    if a < 1 or j < 1:
        raise DomainError(f"need a >= 1 and j >= 1, got a={a}, j={j}")
    coords = ctx.graph.nodes
    base_trace = ctx.belief.trace()
    out = SampledTrajectorySet()
    for _ in range(a):
        node, budget, offset = current, remaining_budget, odometer
        rec = state
        nodes: List[int] = []
        virtual: List[np.ndarray] = []
        first_action = -1
        truncated = False
        for step in range(j):
            obs = build_observation(
                ctx.graph, ctx.belief, ctx.intent_levels, ctx.pe, node, budget, ctx.mu_th,
                as_points(virtual) if virtual else (),
            )
            if not obs.feasible:
                truncated = True
                break
            result = policy_step(net, obs, rec)
            pos = select_action(result.probs.numpy(), rng, greedy)
            nxt = int(obs.neighbors[pos])
            if step == 0:
                first_action = pos
            pts, _, offset = sample_along([coords[node], coords[nxt]], ctx.measurement_interval, offset)
            virtual.extend(pts)
            budget -= float(np.linalg.norm(coords[nxt] - coords[node]))
            node, rec = nxt, result.state
            nodes.append(nxt)
        if not nodes:
            raise DomainError(f"node {current} has no neighbor within budget {remaining_budget:.3f}")
        locations = as_points(virtual) if virtual else np.zeros((0, 2))
        reduction = base_trace - ctx.belief.hypothetical_trace(locations)
        out.trajectories.append(SampledTrajectory(
            start=current, nodes=nodes, points=coords[nodes].copy(), virtual_locations=locations,
            trace_reduction=float(reduction), first_action=first_action, truncated=truncated,
            start_point=coords[current].copy(),
        ))
        if truncated:
            logger.debug(f"Rollout from node {current} truncated after {len(nodes)} of {j} steps")
    return out


def clamp_covariance(cov, min_cov_bound: float = MIN_COV_BOUND) -> np.ndarray:
    """Floors the eigenvalues of a symmetric matrix at ``min_cov_bound``."""
    C = np.asarray(cov, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DomainError(f"covariance must be square, got shape {C.shape}")
    if not np.allclose(C, C.T, atol=1e-12, rtol=0.0):
        raise DomainError("covariance must be symmetric")
    vals, vecs = np.linalg.eigh(C)
    vals = np.maximum(vals, min_cov_bound)
    out = (vecs * vals) @ vecs.T
    return 0.5 * (out + out.T)


def _fit(points: np.ndarray, agent_id: int, step: int, min_cov_bound: float) -> IntentMessage:
    if len(points) == 0:
        raise DomainError("cannot fit an intent to an empty point set")
    mean = points.mean(axis=0)
    cov = np.cov(points.T, bias=True) if len(points) > 1 else np.zeros((2, 2))
    cov = clamp_covariance(np.atleast_2d(cov), min_cov_bound)
    return IntentMessage(
        agent_id=agent_id,
        step=step,
        mean=(float(mean[0]), float(mean[1])),
        cov=((float(cov[0, 0]), float(cov[0, 1])), (float(cov[0, 1]), float(cov[1, 1]))),
    )


def fit_destination_intent(
    trajs: SampledTrajectorySet, agent_id: int = 0, step: int = 0, min_cov_bound: float = MIN_COV_BOUND
) -> IntentMessage:
    """Gaussian over the end nodes of the sampled trajectories."""
    return _fit(trajs.end_points(), agent_id, step, min_cov_bound)


def fit_trajectory_intent(
    trajs: SampledTrajectorySet, agent_id: int = 0, step: int = 0, min_cov_bound: float = MIN_COV_BOUND
) -> IntentMessage:
    """Gaussian over every node visited by the sampled trajectories."""
    return _fit(trajs.all_points(), agent_id, step, min_cov_bound)


def fuse_intents(messages: Sequence[IntentMessage], node_coords) -> np.ndarray:
    """
    Per-node intent levels in [0, 1].

    Args:
        messages: Intents of other agents in range (never the receiver's own)
        node_coords: Coordinates of the receiver's waypoint nodes

    Returns:
        Sum of the message densities at each node divided by its maximum,
        or all zeros when there is no message or the sum vanishes
    """
    coords = as_points(node_coords)
    total = np.zeros(len(coords))
    for msg in messages:
        total += np.atleast_1d(multivariate_normal(msg.mean_array, msg.cov_array).pdf(coords))
    peak = total.max() if len(total) else 0.0
    if not peak > 0:
        return np.zeros(len(coords))
    return total / peak


def fit_intent(
    kind: str, trajs: SampledTrajectorySet, agent_id: int, step: int, min_cov_bound: Optional[float] = None
) -> IntentMessage:
    """Dispatches to the destination (``DI``) or trajectory (``TI``) estimator."""
    bound = MIN_COV_BOUND if min_cov_bound is None else min_cov_bound
    if kind == "DI":
        return fit_destination_intent(trajs, agent_id, step, bound)
    if kind == "TI":
        return fit_trajectory_intent(trajs, agent_id, step, bound)
    raise DomainError(f"unknown intent kind {kind!r}")

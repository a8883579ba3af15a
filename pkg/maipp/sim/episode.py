# maipp/sim/episode.py

"""
Multi-agent episodes.

Graph-based controllers run asynchronously: every agent decides when it
reaches a node, and arrivals are serialized by ``(time, agent id)``. The
SGA+RRT baseline runs in synchronous rounds instead. Both share the
measurement log, the communication model and the metrics.
"""

import heapq
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from maipp.core.belief import BeliefState, high_interest_set
from maipp.core.config import EpisodeConfig, GPHyperParams
from maipp.core.errors import BudgetExhausted, DomainError
from maipp.core.event_queue import EventQueue
from maipp.core.field import GroundTruth
from maipp.core.geometry import path_length, sample_along
from maipp.core.models import Measurement, measurements_to_arrays
from maipp.core.roadmap import WaypointGraph
from maipp.planners.base import Controller
from maipp.planners.sga import SGAPlanner, execution_portion, sga_round
from maipp.policy.network import RecurrentState
from maipp.policy.observation import Observation
from maipp.sim.agent import AgentState, RngStreams, spawn_agent_streams
from maipp.sim.comms import comm_filter
from maipp.sim.rewards import final_reward, step_reward

# Set up logging
logger = logging.getLogger(__name__)

_EPS = 1e-9


@dataclass
class Transition:
    """One agent decision, as PPO consumes it."""
    agent_id: int
    observation: Observation
    action: int
    log_prob: float
    value: float
    state: RecurrentState
    reward: float = 0.0
    done: bool = False


@dataclass
class DecisionRecord:
    """Who decided when, and how much of the team's data it knew."""
    agent_id: int
    time: float
    n_known: int
    n_total: int
    trace: float


@dataclass
class EpisodeMetrics:
    """
    Outcome of one episode.

    ``trace_final`` is computed from the union of every agent's measurements,
    whatever the communication range. ``curve`` rows are
    ``(time, team distance, union trace)``.
    """
    trace_final: float
    curve: List[Tuple[float, float, float]]
    reward_sums: List[float]
    trajectories: List[np.ndarray]
    node_paths: List[List[int]]
    executed_lengths: List[float]
    measurements: List[Measurement]
    decisions: List[DecisionRecord]
    transitions: List[Transition]
    final_mean: np.ndarray
    final_variance: np.ndarray

    @property
    def m(self) -> int:
        return len(self.trajectories)

    def measurements_per_agent(self) -> List[int]:
        counts = [0] * self.m
        for r in self.measurements:
            counts[r.agent_id] += 1
        return counts


class MeasurementLog:
    """
    Every measurement of the episode, released to its owner once taken.

    Measurements are drawn when an agent commits to a path segment and become
    known to the owner at their own timestamps.
    """

    def __init__(self, world: GroundTruth, noise_std: float):
        self.world = world
        self.noise_std = noise_std
        self.records: List[Measurement] = []
        self._pending: List[Tuple[float, int]] = []
        self.realized = 0

    def schedule(self, agent_id: int, points: np.ndarray, times: np.ndarray, rng: np.random.Generator) -> None:
        for loc, t in zip(points, times):
            value = self.world.measure(loc, self.noise_std, rng)
            record = Measurement(
                id=len(self.records), agent_id=agent_id, time=float(t),
                location=(float(loc[0]), float(loc[1])), value=value,
            )
            self.records.append(record)
            heapq.heappush(self._pending, (record.time, record.id))

    def realize(self, time: float) -> List[Measurement]:
        """Releases every measurement taken at or before ``time``."""
        out = []
        while self._pending and self._pending[0][0] <= time + _EPS:
            _, mid = heapq.heappop(self._pending)
            out.append(self.records[mid])
        self.realized += len(out)
        return out

    def realized_ids(self) -> Set[int]:
        pending = {mid for _, mid in self._pending}
        return {r.id for r in self.records if r.id not in pending}


class _Episode:
    def __init__(
        self,
        cfg: EpisodeConfig,
        world: GroundTruth,
        graphs: Sequence[WaypointGraph],
        rng: np.random.Generator,
        hyper: GPHyperParams,
        noise_std: float,
    ):
        if len(graphs) != cfg.m:
            raise DomainError(f"expected {cfg.m} graphs, got {len(graphs)}")
        self.cfg = cfg
        self.world = world
        self.hyper = hyper
        self.log = MeasurementLog(world, noise_std)
        self.streams: List[RngStreams] = spawn_agent_streams(rng, cfg.m)
        self.prior = BeliefState.empty(hyper, world.resolution)
        self._beliefs: Dict[Tuple[int, ...], BeliefState] = {}
        self.agents = [
            AgentState(
                id=i, position=graphs[i].nodes[0].copy(), budget=cfg.budget, remaining_budget=cfg.budget,
                graph=graphs[i], node=0, trajectory=[0], path=[graphs[i].nodes[0].copy()],
            )
            for i in range(cfg.m)
        ]
        self.curve: List[Tuple[float, float, float]] = []
        self.decisions: List[DecisionRecord] = []
        self.transitions: List[Transition] = []

    # --- knowledge -------------------------------------------------------

    def belief(self, ids: Set[int]) -> BeliefState:
        key = tuple(sorted(ids))
        cached = self._beliefs.get(key)
        if cached is None:
            X, Y = measurements_to_arrays([self.log.records[k] for k in key])
            cached = self.prior.with_measurements(X, Y) if len(key) else self.prior
            if len(self._beliefs) > 256:
                self._beliefs.clear()
            self._beliefs[key] = cached
        return cached

    def release(self, time: float) -> None:
        for record in self.log.realize(time):
            self.agents[record.agent_id].known.add(record.id)

    def positions_at(self, time: float) -> np.ndarray:
        return np.array([a.position_at(time) for a in self.agents])

    def merge(self, i: int, visible: Set[int]) -> None:
        agent = self.agents[i]
        for j in sorted(visible):
            agent.known |= self.agents[j].known

    def scoped_trace(self, belief: BeliefState) -> float:
        var = belief.grid_variance()
        if self.cfg.step_reward_scope == "full":
            return float(np.sum(var))
        idx = high_interest_set(belief.grid_mean(), var, self.cfg.mu_th, self.cfg.beta)
        return float(np.sum(var[idx]))

    def interest_variance(self, belief: BeliefState) -> np.ndarray:
        var = belief.grid_variance()
        idx = high_interest_set(belief.grid_mean(), var, self.cfg.mu_th, self.cfg.beta)
        return var[idx]

    def record_curve(self, time: float) -> None:
        if not self.cfg.record_curve:
            return
        team = float(sum(a.travelled_at(time) for a in self.agents))
        union = self.belief(self.log.realized_ids())
        self.curve.append((float(time), team, union.trace()))

    def schedule_measurements(self, agent: AgentState, polyline: np.ndarray, depart: float) -> None:
        pts, arcs, agent.odometer = sample_along(polyline, self.cfg.measurement_interval, agent.odometer)
        self.log.schedule(agent.id, pts, depart + arcs, self.streams[agent.id].noise)

    def finish(self) -> EpisodeMetrics:
        self.release(math.inf)
        final = self.belief(self.log.realized_ids())
        self.record_curve(max((a.executed_length for a in self.agents), default=0.0))
        return EpisodeMetrics(
            trace_final=final.trace(),
            curve=self.curve,
            reward_sums=[a.reward_sum for a in self.agents],
            trajectories=[np.array(a.path) for a in self.agents],
            node_paths=[list(a.trajectory) for a in self.agents],
            executed_lengths=[a.executed_length for a in self.agents],
            measurements=list(self.log.records),
            decisions=self.decisions,
            transitions=self.transitions,
            final_mean=final.grid_mean(),
            final_variance=final.grid_variance(),
        )

    # --- asynchronous graph episodes ---------------------------------------

    def run_graph(self, controller: Controller) -> EpisodeMetrics:
        cfg = self.cfg
        queue = EventQueue()
        prev_trace: List[Optional[float]] = [None] * cfg.m
        last: List[Optional[Transition]] = [None] * cfg.m
        for agent in self.agents:
            controller.start_agent(agent, self.streams[agent.id])
            queue.push(0.0, agent.id)
        self.record_curve(0.0)

        while not queue.empty():
            t, i = queue.pop()
            self.release(t)
            agent = self.agents[i]
            visible = comm_filter(self.positions_at(t), cfg.comm_range)[i]
            self.merge(i, visible)
            belief = self.belief(agent.known)
            trace = self.scoped_trace(belief)
            if prev_trace[i] is not None:
                r = step_reward(prev_trace[i], trace) if prev_trace[i] > 0 else 0.0
                agent.reward_sum += r
                if last[i] is not None:
                    last[i].reward += r
            self.decisions.append(DecisionRecord(i, t, len(agent.known), self.log.realized, trace))
            messages = [
                self.agents[j].intent for j in sorted(visible)
                if j != i and self.agents[j].intent is not None
            ]
            try:
                decision = controller.decide(
                    agent, belief, messages, self.streams[i], cfg.mu_th, cfg.measurement_interval
                )
            except BudgetExhausted:
                agent.halted = True
                agent.intent = None
                r_f = final_reward(self.interest_variance(belief), cfg.final_reward_scale)
                agent.reward_sum += r_f
                if last[i] is not None:
                    last[i].reward += r_f
                    last[i].done = True
                logger.debug(f"Agent {i} halted at t={t:.3f} with {agent.remaining_budget:.3f} budget left")
                self.record_curve(t)
                continue

            if decision.intent is not None:
                agent.intent = decision.intent
            if cfg.collect_transitions and decision.observation is not None:
                last[i] = Transition(
                    agent_id=i, observation=decision.observation, action=decision.position,
                    log_prob=decision.log_prob, value=decision.value,
                    state=agent.rec.detach() if agent.rec is not None else None,
                )
                self.transitions.append(last[i])

            nxt = decision.next_node
            source, target = agent.position, agent.graph.nodes[nxt]
            length = float(np.linalg.norm(target - source))
            self.schedule_measurements(agent, np.array([source, target]), t)
            agent.edge_from = source.copy()
            agent.position = target.copy()
            agent.depart_time, agent.arrive_time = t, t + length
            agent.node = nxt
            agent.trajectory.append(nxt)
            agent.path.append(target.copy())
            agent.remaining_budget -= length
            agent.steps += 1
            if decision.state is not None:
                agent.rec = decision.state
            prev_trace[i] = trace
            queue.push(t + length, i)
            self.record_curve(t)

        return self.finish()

    # --- synchronous SGA rounds ---------------------------------------------

    def run_sga(self, planner: SGAPlanner) -> EpisodeMetrics:
        cfg = self.cfg
        t = 0.0
        self.record_curve(0.0)
        for agent in self.agents:
            agent.trajectory = []
        while True:
            self.release(t)
            for agent in self.agents:
                if not agent.halted and agent.remaining_budget <= _EPS:
                    agent.halted = True
            if all(a.halted for a in self.agents):
                break
            visibility = comm_filter(self.positions_at(t), cfg.comm_range)
            merged = [set().union(*(self.agents[j].known for j in visibility[i])) for i in range(cfg.m)]
            for agent, known in zip(self.agents, merged):
                agent.known = known
            beliefs = [self.belief(a.known) for a in self.agents]
            for agent, belief in zip(self.agents, beliefs):
                if not agent.halted:
                    self.decisions.append(DecisionRecord(agent.id, t, len(agent.known), self.log.realized, belief.trace()))
            interest = None
            if planner.cfg.trace_scope == "interest":
                interest = [
                    high_interest_set(b.grid_mean(), b.grid_variance(), cfg.mu_th, cfg.beta) for b in beliefs
                ]
            chosen = sga_round(
                self.agents, beliefs, visibility, planner.horizon,
                [s.action for s in self.streams], planner.cfg, cfg.measurement_interval, interest,
                execute=cfg.sga_execute,
            )
            step = 0.0
            for agent, path in zip(self.agents, chosen):
                if path is None:
                    continue
                portion = execution_portion(path, agent.remaining_budget, cfg.sga_execute)
                length = path_length(portion)
                self.schedule_measurements(agent, portion, t)
                agent.position = portion[-1].copy()
                agent.path.extend(p.copy() for p in portion[1:])
                agent.remaining_budget = max(agent.remaining_budget - length, 0.0)
                agent.steps += 1
                step = max(step, length)
            if step <= _EPS:
                logger.warning("SGA round made no progress; ending episode")
                break
            t += step
            self.record_curve(t)
        return self.finish()


def run_episode(
    cfg: EpisodeConfig,
    world: GroundTruth,
    graphs: Sequence[WaypointGraph],
    rng: np.random.Generator,
    planner: Union[Controller, SGAPlanner],
    hyper: GPHyperParams = GPHyperParams(),
    noise_std: float = 0.1,
) -> EpisodeMetrics:
    """
    Runs one episode to completion.

    Args:
        cfg: Team size, budget, communication and reward settings
        world: Hidden field the agents measure
        graphs: One roadmap per agent; node 0 of each is the shared start
        rng: Caller-owned source from which every agent's streams are derived
        planner: A graph controller or the SGA+RRT baseline
        hyper: GP hyperparameters of every belief
        noise_std: Measurement noise

    Returns:
        EpisodeMetrics; identical inputs give identical metrics
    """
    episode = _Episode(cfg, world, graphs, rng, hyper, noise_std)
    if isinstance(planner, SGAPlanner):
        metrics = episode.run_sga(planner)
    else:
        metrics = episode.run_graph(planner)
    logger.debug(
        f"Episode with {getattr(planner, 'name', type(planner).__name__)} finished: "
        f"Tr(P_f)={metrics.trace_final:.3f}, {len(metrics.measurements)} measurements"
    )
    return metrics

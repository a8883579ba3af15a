# maipp/sim/agent.py

"""Per-agent mutable state carried through an episode."""

from dataclasses import dataclass, field
from typing import List, Optional, Set

import numpy as np

from maipp.core.models import IntentMessage
from maipp.core.roadmap import WaypointGraph
from maipp.policy.network import RecurrentState


@dataclass
class RngStreams:
    """Independent random streams of one agent, one per purpose."""
    action: np.random.Generator
    intent: np.random.Generator
    noise: np.random.Generator
    setup: np.random.Generator

    @classmethod
    def spawn(cls, seed_seq: np.random.SeedSequence) -> "RngStreams":
        children = seed_seq.spawn(4)
        return cls(*(np.random.default_rng(c) for c in children))


def spawn_agent_streams(rng: np.random.Generator, m: int) -> List[RngStreams]:
    """Derives ``m`` independent stream bundles from a caller-owned generator."""
    root = np.random.SeedSequence(rng.integers(0, 2**63, size=4).tolist())
    return [RngStreams.spawn(child) for child in root.spawn(m)]


@dataclass
class AgentState:
    """
    Position, budget and memory of one agent.

    ``trajectory`` holds visited node indices (graph controllers only);
    ``path`` holds every visited position, for graph and RRT agents alike.
    ``odometer`` is the distance travelled since the last measurement.
    """
    id: int
    position: np.ndarray
    budget: float
    remaining_budget: float
    graph: Optional[WaypointGraph] = None
    node: int = 0
    trajectory: List[int] = field(default_factory=list)
    path: List[np.ndarray] = field(default_factory=list)
    rec: Optional[RecurrentState] = None
    pe: Optional[np.ndarray] = None
    intent: Optional[IntentMessage] = None
    known: Set[int] = field(default_factory=set)
    odometer: float = 0.0
    steps: int = 0
    halted: bool = False
    reward_sum: float = 0.0
    # Edge in progress, for interpolating positions between decisions.
    depart_time: float = 0.0
    arrive_time: float = 0.0
    edge_from: Optional[np.ndarray] = None

    @property
    def executed_length(self) -> float:
        return self.budget - self.remaining_budget

    def position_at(self, time: float) -> np.ndarray:
        """Position at ``time``, interpolated along the edge being travelled."""
        if self.edge_from is None or time >= self.arrive_time or self.arrive_time <= self.depart_time:
            return self.position
        frac = max(time - self.depart_time, 0.0) / (self.arrive_time - self.depart_time)
        return self.edge_from + frac * (self.position - self.edge_from)

    def travelled_at(self, time: float) -> float:
        """Distance covered by ``time`` at unit speed."""
        return min(time, self.executed_length)

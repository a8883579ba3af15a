# maipp/planners/base.py

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence

from maipp.core.belief import BeliefState
from maipp.core.models import IntentMessage
from maipp.policy.network import RecurrentState
from maipp.policy.observation import Observation
from maipp.sim.agent import AgentState, RngStreams


@dataclass
class Decision:
    """The edge an agent commits to, plus what training needs to learn from it."""
    position: int
    next_node: int
    log_prob: float
    value: float
    state: Optional[RecurrentState] = None
    intent: Optional[IntentMessage] = None
    observation: Optional[Observation] = None


class Controller(ABC):
    """Abstract base class for every graph-based decision maker."""

    name: str = "controller"

    def start_agent(self, agent: AgentState, rngs: RngStreams) -> None:
        """
        Prepares per-agent, per-episode state before the first decision.

        Args:
            agent: The agent whose graph and memory are set up
            rngs: The agent's random streams
        """

    @abstractmethod
    def decide(
        self,
        agent: AgentState,
        belief: BeliefState,
        messages: Sequence[IntentMessage],
        rngs: RngStreams,
        mu_th: float,
        measurement_interval: float,
    ) -> Decision:
        """
        Chooses the next edge at a node arrival.

        Args:
            agent: The deciding agent, standing on ``agent.node``
            belief: The agent's belief after merging in-range measurements
            messages: Latest intents of other agents in range
            rngs: The agent's random streams
            mu_th: High-interest threshold fed to the policy
            measurement_interval: Travel between measurements

        Returns:
            A Decision whose ``next_node`` is a neighbor within budget

        Raises:
            BudgetExhausted: if no neighbor is reachable; the agent halts
        """
        pass

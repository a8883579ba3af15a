# maipp/planners/learned.py

"""
Controllers driven by the shared attention policy.

One class covers every learned variant: the intent-free ablation, destination
and trajectory intent, and the rule that executes the first step of the best
sampled rollout instead of a fresh policy sample.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from maipp.core.belief import BeliefState
from maipp.core.errors import BudgetExhausted, DomainError
from maipp.core.intent import MIN_COV_BOUND, RolloutContext, fit_intent, fuse_intents, sample_trajectories
from maipp.core.models import IntentMessage
from maipp.planners.base import Controller, Decision
from maipp.policy.network import PolicyNet, PolicyOutput, RecurrentState
from maipp.policy.observation import Observation, build_observation, policy_step, select_action, uniform_probs
from maipp.policy.positional import positional_embedding
from maipp.sim.agent import AgentState, RngStreams

# Set up logging
logger = logging.getLogger(__name__)


def intent_free_policy_step(net: PolicyNet, obs: Observation, state: RecurrentState) -> PolicyOutput:
    """The policy run on the observation with every intent level zeroed."""
    return policy_step(net, obs.without_intent(), state)


class LearnedController(Controller):
    """
    Attention policy with optional intent sharing.

    Args:
        net: Shared policy network
        intent_kind: ``None`` (no intent), ``"DI"`` or ``"TI"``
        a: Rollouts per intent
        j: Nodes per rollout
        best_first_step: Execute the first edge of the rollout with the
            largest virtual trace reduction
        greedy: Argmax for the executed action; intent rollouts are always
            sampled from the policy
        intent_input: Feed received intents to the network
        broadcast: Publish the fitted intent to other agents
        training: Randomize positional-embedding signs per episode
        min_cov_bound: Eigenvalue floor of fitted intent covariances
    """

    def __init__(
        self,
        net: PolicyNet,
        intent_kind: Optional[str] = None,
        a: int = 8,
        j: int = 5,
        best_first_step: bool = False,
        greedy: bool = False,
        intent_input: bool = True,
        broadcast: bool = True,
        training: bool = False,
        min_cov_bound: float = MIN_COV_BOUND,
    ):
        if intent_kind not in (None, "DI", "TI"):
            raise DomainError(f"unknown intent kind {intent_kind!r}")
        if best_first_step and intent_kind is None:
            raise DomainError("best-first-step execution needs sampled intent rollouts")
        self.net = net
        self.intent_kind = intent_kind
        self.a = a
        self.j = j
        self.best_first_step = best_first_step
        self.greedy = greedy
        self.intent_input = intent_input and intent_kind is not None
        self.broadcast = broadcast
        self.training = training
        self.min_cov_bound = min_cov_bound

    @property
    def name(self) -> str:
        if self.intent_kind is None:
            return "intent-free"
        return f"{self.intent_kind}({self.a},{self.j})" + ("*" if self.best_first_step else "")

    def start_agent(self, agent: AgentState, rngs: RngStreams) -> None:
        if agent.graph is None:
            raise DomainError("learned controllers need a waypoint graph")
        agent.pe = positional_embedding(
            agent.graph, self.net.cfg.k_eig, rngs.setup if self.training else None
        )
        agent.rec = RecurrentState.zeros(self.net.d_model)

    def decide(
        self,
        agent: AgentState,
        belief: BeliefState,
        messages: Sequence[IntentMessage],
        rngs: RngStreams,
        mu_th: float,
        measurement_interval: float,
    ) -> Decision:
        graph = agent.graph
        if self.intent_input:
            levels = fuse_intents(messages, graph.nodes)
        else:
            levels = np.zeros(graph.n)
        obs = build_observation(graph, belief, levels, agent.pe, agent.node, agent.remaining_budget, mu_th)
        if not obs.feasible:
            raise BudgetExhausted(f"agent {agent.id} cannot leave node {agent.node}")

        intent = None
        trajs = None
        if self.intent_kind is not None:
            ctx = RolloutContext(graph, belief, levels, agent.pe, mu_th, measurement_interval)
            trajs = sample_trajectories(
                self.net, ctx, agent.node, agent.remaining_budget, agent.rec,
                self.a, self.j, rngs.intent, False, agent.odometer,
            )
            message = fit_intent(self.intent_kind, trajs, agent.id, agent.steps, self.min_cov_bound)
            if self.broadcast:
                intent = message

        if self.intent_input:
            out = policy_step(self.net, obs, agent.rec)
        else:
            out = intent_free_policy_step(self.net, obs, agent.rec)
        probs = out.probs.numpy()
        if self.best_first_step:
            pos = trajs.best().first_action
        else:
            pos = select_action(probs, rngs.action, self.greedy)
        return Decision(
            position=pos,
            next_node=int(obs.neighbors[pos]),
            log_prob=float(out.log_probs[pos]),
            value=float(out.value),
            state=out.state,
            intent=intent,
            observation=obs,
        )


class RandomController(Controller):
    """Uniform choice among the neighbors reachable within the remaining budget."""

    name = "random"

    def decide(
        self,
        agent: AgentState,
        belief: BeliefState,
        messages: Sequence[IntentMessage],
        rngs: RngStreams,
        mu_th: float,
        measurement_interval: float,
    ) -> Decision:
        neighbors, lengths = agent.graph.neighbor_arrays(agent.node)
        mask = lengths <= agent.remaining_budget + 1e-12
        probs = uniform_probs(mask)
        pos = select_action(probs, rngs.action)
        return Decision(position=pos, next_node=int(neighbors[pos]), log_prob=float(np.log(probs[pos])), value=0.0)

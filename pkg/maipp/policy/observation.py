# maipp/policy/observation.py

"""Observation assembly, batching and action selection around :class:`PolicyNet`."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import torch

from maipp.core.belief import BeliefState
from maipp.core.errors import BudgetExhausted
from maipp.core.roadmap import WaypointGraph, augment
from maipp.policy.network import DTYPE, PolicyNet, PolicyOutput, RecurrentState


@dataclass
class Observation:
    """Everything one agent's network sees at a decision step."""
    features: np.ndarray
    pe: np.ndarray
    current: int
    neighbors: np.ndarray
    mask: np.ndarray
    remaining_budget: float
    mu_th: float

    @property
    def feasible(self) -> bool:
        return bool(self.mask.any())

    def without_intent(self) -> "Observation":
        """The same observation with the intent-level column zeroed."""
        features = self.features.copy()
        features[:, 4] = 0.0
        return Observation(features, self.pe, self.current, self.neighbors, self.mask,
                           self.remaining_budget, self.mu_th)


def build_observation(
    graph: WaypointGraph,
    belief: BeliefState,
    intent_levels: np.ndarray,
    pe: np.ndarray,
    current: int,
    remaining_budget: float,
    mu_th: float,
    extra_locations: Sequence[Sequence[float]] = (),
) -> Observation:
    """Augments the graph and masks neighbors whose edge exceeds the remaining budget."""
    aug = augment(graph, belief, intent_levels, extra_locations)
    neighbors, lengths = graph.neighbor_arrays(current)
    mask = lengths <= remaining_budget + 1e-12
    return Observation(aug.features, pe, current, neighbors, mask, float(remaining_budget), float(mu_th))


def collate(observations: List[Observation]) -> Dict[str, torch.Tensor]:
    """Stacks observations into padded tensors; padded neighbor slots are masked."""
    width = max(len(o.neighbors) for o in observations)
    neighbors = np.zeros((len(observations), width), dtype=np.int64)
    mask = np.zeros((len(observations), width), dtype=bool)
    for i, o in enumerate(observations):
        neighbors[i, : len(o.neighbors)] = o.neighbors
        mask[i, : len(o.mask)] = o.mask
    return {
        "features": torch.as_tensor(np.stack([o.features for o in observations]), dtype=DTYPE),
        "pe": torch.as_tensor(np.stack([o.pe for o in observations]), dtype=DTYPE),
        "current": torch.as_tensor([o.current for o in observations], dtype=torch.long),
        "neighbors": torch.as_tensor(neighbors),
        "mask": torch.as_tensor(mask),
        "remaining_budget": torch.as_tensor([o.remaining_budget for o in observations], dtype=DTYPE),
        "mu_th": torch.as_tensor([o.mu_th for o in observations], dtype=DTYPE),
    }


def stack_states(states: List[RecurrentState]) -> RecurrentState:
    return RecurrentState(torch.stack([s.hidden for s in states]), torch.stack([s.cell for s in states]))


@torch.no_grad()
def policy_step(net: PolicyNet, obs: Observation, state: RecurrentState) -> PolicyOutput:
    """
    Runs the network on a single observation.

    Returns:
        A PolicyOutput with unbatched tensors: probabilities over
        ``obs.neighbors`` (masked entries exactly zero), a scalar value and
        the next recurrent state
    """
    if not obs.feasible:
        raise BudgetExhausted("no neighbor is reachable with the remaining budget")
    batch = collate([obs])
    out = net(batch, RecurrentState(state.hidden.unsqueeze(0), state.cell.unsqueeze(0)))
    return PolicyOutput(
        probs=out.probs[0],
        log_probs=out.log_probs[0],
        value=out.value[0],
        state=RecurrentState(out.state.hidden[0], out.state.cell[0]),
    )


def select_action(probs: np.ndarray, rng: Optional[np.random.Generator], greedy: bool = False) -> int:
    """Samples a neighbor position from ``probs``; greedy picks the lowest-index argmax."""
    p = np.asarray(probs, dtype=float)
    if greedy or rng is None:
        return int(np.argmax(p))
    cdf = np.cumsum(p)
    u = rng.random() * cdf[-1]
    pos = int(np.searchsorted(cdf, u, side="right"))
    pos = min(pos, len(p) - 1)
    # never land on a masked (zero-probability) slot
    while p[pos] <= 0.0:
        pos -= 1
    return pos


def uniform_probs(mask: np.ndarray) -> np.ndarray:
    if not mask.any():
        raise BudgetExhausted("no neighbor is reachable with the remaining budget")
    p = mask.astype(float)
    return p / p.sum()

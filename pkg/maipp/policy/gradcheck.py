# maipp/policy/gradcheck.py

"""Central finite-difference check of the network's analytic gradients."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch

from maipp.policy.network import PolicyNet, RecurrentState
from maipp.policy.observation import Observation, collate

# Set up logging
logger = logging.getLogger(__name__)


@dataclass
class GradientReport:
    """Probed gradient entries per parameter tensor."""
    max_relative_error: float
    per_parameter: Dict[str, List[Tuple[int, float, float]]] = field(default_factory=dict)

    def worst(self) -> Optional[Tuple[str, int, float, float]]:
        best = None
        for name, rows in self.per_parameter.items():
            for idx, a, n in rows:
                err = abs(a - n)
                if best is None or err > abs(best[2] - best[3]):
                    best = (name, idx, a, n)
        return best


def _objective(net: PolicyNet, batch, state: RecurrentState, action: int) -> torch.Tensor:
    out = net(batch, state)
    return out.log_probs[0, action] + out.value[0]


def gradient_check(
    net: PolicyNet,
    obs: Observation,
    rng: np.random.Generator,
    action: Optional[int] = None,
    eps: float = 1e-5,
    probes_per_tensor: int = 6,
    abs_floor: float = 1e-4,
) -> GradientReport:
    """
    Compares autograd against central differences of ``log pi(action) + V``.

    Args:
        net: A float64 policy network
        obs: A small fixed observation (e.g. a 10-node graph)
        rng: Picks which entries of large tensors are probed
        action: Neighbor position whose log-probability is differentiated;
            defaults to the first unmasked neighbor
        eps: Finite-difference step
        probes_per_tensor: Entries probed per parameter tensor
        abs_floor: Denominator floor of the relative error

    Returns:
        A GradientReport whose ``max_relative_error`` is
        ``max |a - n| / max(|a|, |n|, abs_floor)`` over probed entries
    """
    if action is None:
        action = int(np.flatnonzero(obs.mask)[0])
    batch = collate([obs])
    state = RecurrentState.zeros(net.d_model, batch=1)

    net.zero_grad()
    _objective(net, batch, state, action).backward()
    analytic = {name: p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p)
                for name, p in net.named_parameters()}

    report = GradientReport(max_relative_error=0.0)
    with torch.no_grad():
        for name, p in net.named_parameters():
            flat = p.view(-1)
            count = flat.numel()
            if count <= probes_per_tensor:
                picks = np.arange(count)
            else:
                picks = np.sort(rng.choice(count, size=probes_per_tensor, replace=False))
            rows = []
            for idx in picks:
                idx = int(idx)
                original = flat[idx].item()
                flat[idx] = original + eps
                f_plus = _objective(net, batch, state, action).item()
                flat[idx] = original - eps
                f_minus = _objective(net, batch, state, action).item()
                flat[idx] = original
                numeric = (f_plus - f_minus) / (2.0 * eps)
                a = analytic[name].view(-1)[idx].item()
                rows.append((idx, a, numeric))
                rel = abs(a - numeric) / max(abs(a), abs(numeric), abs_floor)
                report.max_relative_error = max(report.max_relative_error, rel)
            report.per_parameter[name] = rows
    net.zero_grad()
    logger.debug(f"Gradient check max relative error {report.max_relative_error:.3e}")
    return report

# maipp/sim/rewards.py

"""Per-decision and terminal rewards."""

import numpy as np

from maipp.core.errors import DomainError


def step_reward(trace_prev: float, trace_curr: float) -> float:
    """Relative uncertainty reduction since the agent's previous decision."""
    if not trace_prev > 0:
        raise DomainError(f"previous trace must be positive, got {trace_prev}")
    return (trace_prev - trace_curr) / trace_prev


def final_reward(P_interest, scale: float = 0.02) -> float:
    """
    Terminal penalty on the uncertainty left over the high-interest cells.

    Args:
        P_interest: Final covariance restricted to the high-interest set,
            as a square matrix or as its diagonal
        scale: Weight of the remaining trace

    Returns:
        ``-scale * Tr(P_interest)``; zero for an empty set
    """
    P = np.asarray(P_interest, dtype=float)
    if P.size == 0:
        return 0.0
    trace = float(np.trace(P)) if P.ndim == 2 else float(np.sum(P))
    return -scale * trace

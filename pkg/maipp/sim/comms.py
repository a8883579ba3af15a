# maipp/sim/comms.py

import math
from typing import List, Set

import numpy as np
from scipy.spatial.distance import cdist

from maipp.core.errors import DomainError
from maipp.core.geometry import as_points


def comm_filter(positions, comm_range: float) -> List[Set[int]]:
    """
    Who hears whom.

    Args:
        positions: One 2-vector per agent, all taken at the same instant
        comm_range: Positive radius, or ``math.inf`` for global communication

    Returns:
        For each agent ``i``, the ids within ``comm_range`` of it (``i`` included)
    """
    if not comm_range > 0:
        raise DomainError(f"comm_range must be positive, got {comm_range}")
    pts = as_points(positions)
    if math.isinf(comm_range):
        everyone = set(range(len(pts)))
        return [set(everyone) for _ in range(len(pts))]
    within = cdist(pts, pts) <= comm_range
    np.fill_diagonal(within, True)
    return [set(np.flatnonzero(row).tolist()) for row in within]

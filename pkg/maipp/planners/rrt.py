# maipp/planners/rrt.py

"""Budgeted RRT candidate paths and their evaluation under a hypothetical belief."""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from maipp.core.belief import BeliefState
from maipp.core.config import RRTConfig
from maipp.core.errors import DomainError
from maipp.core.geometry import as_points, check_in_domain, sample_along

# Set up logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidatePath:
    """A root-to-node branch of an RRT; ``predicted_final_trace`` is NaN until evaluated."""
    waypoints: np.ndarray
    length: float
    predicted_final_trace: float = float("nan")

    @property
    def start(self) -> np.ndarray:
        return self.waypoints[0]

    def with_trace(self, trace: float) -> "CandidatePath":
        return replace(self, predicted_final_trace=float(trace))


PathLike = Union[CandidatePath, Sequence[Sequence[float]], np.ndarray]


def _waypoints(path: PathLike) -> np.ndarray:
    return path.waypoints if isinstance(path, CandidatePath) else as_points(path)


def _branch(parents: np.ndarray, nodes: np.ndarray, leaf: int) -> np.ndarray:
    idx = []
    v = leaf
    while v >= 0:
        idx.append(v)
        v = parents[v]
    return nodes[idx[::-1]].copy()


def grow_rrt(
    start: Sequence[float],
    horizon: Tuple[float, float],
    rng: np.random.Generator,
    cfg: RRTConfig = RRTConfig(),
) -> List[CandidatePath]:
    """
    Grows an exploration tree from ``start`` and returns its branches in the horizon window.

    Nodes whose cost from the root would exceed ``b`` are pulled back onto
    the ``b`` boundary, and only nodes below ``b`` are extended. Growth stops
    once ``cfg.max_candidates`` branches end inside ``[a, b]`` or after
    ``cfg.max_iterations`` samples.

    Args:
        start: Root position in [0,1]^2
        horizon: ``(a, b)`` window of admissible branch lengths
        rng: Random source for tree samples
        cfg: Step size, candidate caps and iteration limit

    Returns:
        Candidate paths ordered by node creation, at most ``cfg.max_candidates``
    """
    a, b = float(horizon[0]), float(horizon[1])
    if not 0 < a < b:
        raise DomainError(f"RRT horizon must satisfy 0 < a < b, got ({a}, {b})")
    if b < cfg.step:
        raise DomainError(f"horizon upper bound {b} is below the RRT step {cfg.step}")
    root = check_in_domain(start)

    capacity = cfg.max_iterations + 1
    nodes = np.empty((capacity, 2))
    parents = np.full(capacity, -1, dtype=int)
    cost = np.zeros(capacity)
    nodes[0] = root
    size = 1
    in_window: List[int] = []

    for _ in range(cfg.max_iterations):
        q = rng.uniform(0.0, 1.0, size=2)
        open_idx = np.flatnonzero(cost[:size] < b - 1e-12)
        if open_idx.size == 0:
            break
        d = np.linalg.norm(nodes[open_idx] - q, axis=1)
        near = int(open_idx[np.argmin(d)])
        direction = q - nodes[near]
        dist = float(np.linalg.norm(direction))
        if dist < 1e-12:
            continue
        step = min(cfg.step, dist, b - cost[near])
        new = np.clip(nodes[near] + direction * (step / dist), 0.0, 1.0)
        nodes[size] = new
        parents[size] = near
        cost[size] = cost[near] + float(np.linalg.norm(new - nodes[near]))
        if a - 1e-12 <= cost[size] <= b + 1e-12:
            in_window.append(size)
        size += 1
        if len(in_window) >= cfg.max_candidates:
            break

    if len(in_window) < cfg.min_candidates:
        logger.warning(f"RRT from {root.tolist()} found only {len(in_window)} candidates in [{a}, {b}]")
    if not in_window:
        raise DomainError(f"RRT found no branch with length in [{a}, {b}]")
    return [CandidatePath(waypoints=_branch(parents, nodes, leaf), length=float(cost[leaf])) for leaf in in_window]


def path_measurements(path: PathLike, spacing: float = 0.2, offset: float = 0.0) -> np.ndarray:
    """Locations where an agent travelling ``path`` would measure."""
    pts, _, _ = sample_along(_waypoints(path), spacing, offset)
    return pts


def evaluate_path(
    path: PathLike,
    belief: BeliefState,
    conditioning_paths: Sequence[PathLike] = (),
    spacing: float = 0.2,
    offset: float = 0.0,
    interest_idx: Optional[np.ndarray] = None,
) -> float:
    """
    Predicted final trace after travelling ``path`` and all ``conditioning_paths``.

    Args:
        path: The evaluated candidate
        belief: Current belief of the evaluating agent
        conditioning_paths: Paths already chosen by other agents this round
        spacing: Travel between virtual measurements
        offset: Distance the evaluating agent travelled since its last measurement
        interest_idx: Restrict the trace to these grid cells; full grid if None

    Returns:
        The hypothetical posterior trace
    """
    virtual = [path_measurements(path, spacing, offset)]
    virtual += [path_measurements(p, spacing) for p in conditioning_paths]
    locations = np.vstack(virtual)
    if interest_idx is None:
        return belief.hypothetical_trace(locations)
    var = belief.hypothetical_grid_variance(locations)
    return float(np.sum(var[np.asarray(interest_idx, dtype=int)]))


# maipp/sim/instances.py

"""Seeded benchmark instances: a hidden field, a shared start and one roadmap per agent."""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from maipp.core.config import FieldConfig, GraphConfig
from maipp.core.field import GroundTruth, generate_ground_truth
from maipp.core.roadmap import WaypointGraph, build_prm

# Set up logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Instance:
    id: int
    world: GroundTruth
    start: np.ndarray
    graphs: List[WaypointGraph]


def instance_seed(seed: int, instance_id: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, instance_id])


def trial_rng(seed: int, instance_id: int, trial: int) -> np.random.Generator:
    """Episode randomness of one trial; shared by every method for paired comparisons."""
    return np.random.default_rng(np.random.SeedSequence([seed, instance_id, trial, 1]))


def make_instance(
    seed: int,
    instance_id: int,
    m: int,
    field_cfg: FieldConfig = FieldConfig(),
    graph_cfg: GraphConfig = GraphConfig(),
    random_start: bool = True,
) -> Instance:
    """
    Builds instance ``instance_id`` of the experiment seeded with ``seed``.

    Agents get independent roadmaps that all contain the shared start as node 0.
    The field and start depend only on ``(seed, instance_id)``, so adding
    agents never changes the world.
    """
    world_seq, start_seq, graph_seq = instance_seed(seed, instance_id).spawn(3)
    world = generate_ground_truth(np.random.default_rng(world_seq), field_cfg)
    if random_start:
        start = np.random.default_rng(start_seq).uniform(0.0, 1.0, size=2)
    else:
        start = np.array([0.5, 0.5])
    graphs = [
        build_prm(np.random.default_rng(s), graph_cfg.n, graph_cfg.k, start=start)
        for s in graph_seq.spawn(m)
    ]
    logger.debug(f"Built instance {instance_id} with {len(world.components)} components, start {start.round(3).tolist()}")
    return Instance(id=instance_id, world=world, start=start, graphs=graphs)

import math

import numpy as np
import pytest
import torch

from maipp.core.config import EpisodeConfig, ExperimentConfig, GraphConfig, PolicyConfig
from maipp.core.field import GroundTruth
from maipp.core.models import GaussianComponent
from maipp.core.roadmap import WaypointGraph, build_prm
from maipp.policy.network import PolicyNet

TINY_POLICY = PolicyConfig(d_model=8, n_layers=1, ff_hidden=16, k_eig=4)


def make_graph(nodes, edges) -> WaypointGraph:
    """Builds a WaypointGraph from explicit coordinates and an undirected edge list."""
    nodes = np.asarray(nodes, dtype=float)
    rows = [[] for _ in range(len(nodes))]
    for u, v in edges:
        d = float(np.linalg.norm(nodes[u] - nodes[v]))
        rows[u].append((v, d))
        rows[v].append((u, d))
    return WaypointGraph(nodes=nodes, adjacency=tuple(tuple(sorted(r)) for r in rows))


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def small_graph():
    """A 10-node roadmap whose node 0 is the center of the square."""
    return build_prm(np.random.default_rng(3), n=10, k=4, start=(0.5, 0.5))


@pytest.fixture
def single_bump():
    """A field with one component at the center, so its peak is exactly there."""
    return GroundTruth.from_components([GaussianComponent(mean=(0.5, 0.5), std=0.1, weight=1.0)])


@pytest.fixture
def tiny_net():
    torch.manual_seed(0)
    net = PolicyNet(TINY_POLICY)
    net.eval()
    return net


@pytest.fixture
def tiny_cfg(tmp_path):
    """Desk-scale experiment: 10-node roadmaps, two agents, unit budget."""
    return ExperimentConfig(
        graph=GraphConfig(n=10, k=4),
        policy=TINY_POLICY,
        episode=EpisodeConfig(m=2, budget=1.0, comm_range=math.inf),
        methods=["random"],
        budgets=[1.0],
        instances=1,
        trials=1,
        seed=5,
        output={"directory": tmp_path / "results"},
    )

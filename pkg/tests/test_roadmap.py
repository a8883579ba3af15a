from collections import deque

import numpy as np
import pytest

from maipp.core.belief import BeliefState
from maipp.core.errors import DomainError
from maipp.core.roadmap import augment, build_prm
from tests.conftest import make_graph


def bfs_reachable(g, source=0):
    seen = {source}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for u, _ in g.neighbors(v):
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return seen


def test_default_prm_degree_and_connectivity():
    g = build_prm(np.random.default_rng(0), n=200, k=20)
    assert g.n == 200
    assert min(len(g.neighbors(v)) for v in range(g.n)) >= 20
    assert bfs_reachable(g) == set(range(g.n))


def test_two_node_prm_has_single_edge():
    g = build_prm(np.random.default_rng(1), n=2, k=1)
    assert list(g.edges()) == [(0, 1, pytest.approx(float(np.linalg.norm(g.nodes[0] - g.nodes[1]))))]
    assert len(g.neighbors(0)) == 1
    assert len(g.neighbors(1)) == 1


@pytest.mark.parametrize("seed", range(10))
def test_random_prm_is_connected_and_symmetric(seed):
    g = build_prm(np.random.default_rng(seed), n=60, k=3)
    assert bfs_reachable(g) == set(range(g.n))
    for v in range(g.n):
        for u, d in g.neighbors(v):
            assert u != v
            assert v in [w for w, _ in g.neighbors(u)]
            assert d == pytest.approx(float(np.linalg.norm(g.nodes[u] - g.nodes[v])), abs=1e-15)
        ids = [u for u, _ in g.neighbors(v)]
        assert len(ids) == len(set(ids))


def test_start_is_node_zero():
    g = build_prm(np.random.default_rng(2), n=20, k=5, start=(0.25, 0.75))
    np.testing.assert_array_equal(g.nodes[0], [0.25, 0.75])


def test_invalid_sizes_raise():
    with pytest.raises(DomainError):
        build_prm(np.random.default_rng(0), n=5, k=5)
    with pytest.raises(DomainError):
        build_prm(np.random.default_rng(0), n=5, k=0)


def test_neighbors_out_of_range(small_graph):
    with pytest.raises(DomainError):
        small_graph.neighbors(small_graph.n)


def test_networkx_view_matches(small_graph):
    nxg = small_graph.to_networkx()
    assert nxg.number_of_nodes() == small_graph.n
    assert nxg.number_of_edges() == len(list(small_graph.edges()))


def test_augment_prior_and_zero_intent(small_graph):
    aug = augment(small_graph, BeliefState.empty(), np.zeros(small_graph.n))
    assert len(aug) == small_graph.n
    assert all(node.belief_var == pytest.approx(1.0) for node in aug)
    assert all(node.belief_mean == 0.0 for node in aug)
    assert all(node.intent_level == 0.0 for node in aug)


def test_augment_matches_gp_at_nodes(small_graph):
    rng = np.random.default_rng(9)
    belief = BeliefState(rng.uniform(0, 1, (5, 2)), rng.normal(size=5))
    levels = rng.uniform(0, 1, small_graph.n)
    aug = augment(small_graph, belief, levels)
    mu, var = belief.predict(small_graph.nodes)
    np.testing.assert_allclose(aug.features[:, 2], mu)
    np.testing.assert_allclose(aug.features[:, 3], var)
    np.testing.assert_array_equal(aug.features[:, 4], levels)
    assert aug[0].x == small_graph.nodes[0, 0]


def test_augment_wrong_level_count(small_graph):
    with pytest.raises(DomainError):
        augment(small_graph, BeliefState.empty(), np.zeros(small_graph.n + 1))


def test_explicit_graph_helper():
    g = make_graph([(0, 0), (0.3, 0.4)], [(0, 1)])
    assert g.neighbors(0) == [(1, pytest.approx(0.5))]

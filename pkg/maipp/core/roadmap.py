# maipp/core/roadmap.py

"""Per-agent probabilistic roadmaps and their augmentation with belief and intent features."""

import logging
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from maipp.core.belief import BeliefState
from maipp.core.errors import DomainError

# Set up logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WaypointGraph:
    """
    An undirected, connected PRM over the unit square.

    ``adjacency[v]`` lists ``(neighbor, edge length)`` sorted by neighbor index.
    """
    nodes: np.ndarray
    adjacency: Tuple[Tuple[Tuple[int, float], ...], ...]

    @property
    def n(self) -> int:
        return len(self.nodes)

    def neighbors(self, v: int) -> List[Tuple[int, float]]:
        if not 0 <= v < self.n:
            raise DomainError(f"node index {v} out of range for a graph of {self.n} nodes")
        return list(self.adjacency[v])

    def neighbor_arrays(self, v: int) -> Tuple[np.ndarray, np.ndarray]:
        entries = self.neighbors(v)
        idx = np.array([u for u, _ in entries], dtype=int)
        lengths = np.array([d for _, d in entries], dtype=float)
        return idx, lengths

    def edges(self) -> Iterator[Tuple[int, int, float]]:
        """Each undirected edge once, as ``(u, v, length)`` with ``u < v``."""
        for u, row in enumerate(self.adjacency):
            for v, d in row:
                if u < v:
                    yield u, v, d

    def adjacency_matrix(self) -> csr_matrix:
        rows, cols = [], []
        for u, row in enumerate(self.adjacency):
            for v, _ in row:
                rows.append(u)
                cols.append(v)
        data = np.ones(len(rows))
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_weighted_edges_from(self.edges())
        return g


def _from_edge_set(nodes: np.ndarray, edges: set) -> WaypointGraph:
    rows: List[List[Tuple[int, float]]] = [[] for _ in range(len(nodes))]
    for u, v in sorted(edges):
        d = float(np.linalg.norm(nodes[u] - nodes[v]))
        rows[u].append((v, d))
        rows[v].append((u, d))
    adjacency = tuple(tuple(sorted(r)) for r in rows)
    return WaypointGraph(nodes=nodes, adjacency=adjacency)


def _bridge_components(nodes: np.ndarray, edges: set) -> None:
    """Adds shortest bridging edges until the graph is connected."""
    g = nx.Graph()
    g.add_nodes_from(range(len(nodes)))
    g.add_edges_from(edges)
    components = sorted((sorted(c) for c in nx.connected_components(g)), key=lambda c: c[0])
    while len(components) > 1:
        main = np.array(components[0])
        rest = np.array([v for c in components[1:] for v in c])
        dist = cdist(nodes[main], nodes[rest])
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        u, v = int(main[i]), int(rest[j])
        edges.add((min(u, v), max(u, v)))
        g.add_edge(u, v)
        logger.debug(f"Bridged PRM components with edge ({u}, {v})")
        components = sorted((sorted(c) for c in nx.connected_components(g)), key=lambda c: c[0])


def build_prm(
    rng: np.random.Generator,
    n: int = 200,
    k: int = 20,
    domain: Tuple[float, float] = (0.0, 1.0),
    start: Optional[Sequence[float]] = None,
) -> WaypointGraph:
    """
    Builds a probabilistic roadmap from uniform samples.

    Args:
        rng: Random source owned by the caller
        n: Number of nodes
        k: Neighbors each node connects to before symmetric closure
        domain: Bounds of the square sampling domain
        start: Optional fixed location for node 0 (the shared start position)

    Returns:
        A connected WaypointGraph with no self-loops or duplicate edges
    """
    if not n > k >= 1:
        raise DomainError(f"PRM requires n > k >= 1, got n={n}, k={k}")
    lo, hi = domain
    nodes = rng.uniform(lo, hi, size=(n, 2))
    if start is not None:
        nodes[0] = np.asarray(start, dtype=float)
    tree = cKDTree(nodes)
    _, idx = tree.query(nodes, k=k + 1)
    edges = set()
    for u in range(n):
        for v in idx[u]:
            v = int(v)
            if v != u and np.any(nodes[u] != nodes[v]):
                edges.add((min(u, v), max(u, v)))
    _bridge_components(nodes, edges)
    return _from_edge_set(nodes, edges)


class AugmentedNode(NamedTuple):
    x: float
    y: float
    belief_mean: float
    belief_var: float
    intent_level: float


@dataclass(frozen=True)
class AugmentedGraph:
    """Node feature matrix with columns ``(x, y, mu, P, f)``."""
    features: np.ndarray

    def __len__(self) -> int:
        return len(self.features)

    def __getitem__(self, i: int) -> AugmentedNode:
        return AugmentedNode(*(float(v) for v in self.features[i]))

    def __iter__(self) -> Iterator[AugmentedNode]:
        return (self[i] for i in range(len(self)))


def augment(
    g: WaypointGraph,
    belief: BeliefState,
    fused_intent_levels: Sequence[float],
    extra_locations: Sequence[Sequence[float]] = (),
) -> AugmentedGraph:
    """
    Attaches belief and intent information to every node of a graph.

    The GP is evaluated directly at the node coordinates; ``extra_locations``
    lets virtual rollouts shrink the variance feature without real data.
    """
    f = np.asarray(fused_intent_levels, dtype=float).reshape(-1)
    if len(f) != g.n:
        raise DomainError(f"expected {g.n} intent levels, got {len(f)}")
    mu, var = belief.predict(g.nodes, extra_locations)
    return AugmentedGraph(np.column_stack([g.nodes, mu, var, f]))

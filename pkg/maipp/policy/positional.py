# maipp/policy/positional.py

"""Laplacian eigenvector positional embeddings for waypoint graphs."""

from typing import Optional, Tuple

import numpy as np
from scipy.sparse.csgraph import laplacian

from maipp.core.errors import EigenSolverError
from maipp.core.roadmap import WaypointGraph


def laplacian_spectrum(g: WaypointGraph) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of the symmetric-normalized Laplacian."""
    L = laplacian(g.adjacency_matrix().astype(float), normed=True)
    L = L.toarray() if hasattr(L, "toarray") else np.asarray(L)
    try:
        vals, vecs = np.linalg.eigh(L)
    except np.linalg.LinAlgError as e:
        raise EigenSolverError(f"Laplacian eigendecomposition failed: {e}") from e
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(vecs))):
        raise EigenSolverError("Laplacian eigendecomposition returned non-finite values")
    return vals, vecs


def canonical_signs(vecs: np.ndarray) -> np.ndarray:
    """Flips each column so that its first non-negligible entry is positive."""
    out = vecs.copy()
    for j in range(out.shape[1]):
        nz = np.flatnonzero(np.abs(out[:, j]) > 1e-12)
        if nz.size and out[nz[0], j] < 0:
            out[:, j] = -out[:, j]
    return out


def positional_embedding(
    g: WaypointGraph, k_eig: int, rng: Optional[np.random.Generator] = None
) -> np.ndarray:
    """
    The ``k_eig`` smallest nontrivial Laplacian eigenvectors, one row per node.

    Args:
        g: A connected waypoint graph
        k_eig: Number of eigenvectors; zero-padded when the graph is smaller
        rng: When given, every column gets a random sign (training);
            otherwise the deterministic sign convention applies (evaluation)

    Returns:
        Array of shape ``(n, k_eig)``
    """
    _, vecs = laplacian_spectrum(g)
    vecs = vecs[:, 1 : k_eig + 1]
    if rng is None:
        vecs = canonical_signs(vecs)
    else:
        vecs = vecs * rng.choice([-1.0, 1.0], size=vecs.shape[1])
    if vecs.shape[1] < k_eig:
        vecs = np.hstack([vecs, np.zeros((g.n, k_eig - vecs.shape[1]))])
    return vecs

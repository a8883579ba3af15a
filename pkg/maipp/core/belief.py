# maipp/core/belief.py

"""
Gaussian-process belief over the inference grid.

The posterior covariance depends only on *where* measurements were taken,
never on their values. Virtual rollouts and the RRT planner rely on this:
they condition the current posterior on hypothetical locations through a
Schur-complement update instead of refitting from scratch.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular
from scipy.spatial.distance import cdist

from maipp.core.config import GPHyperParams
from maipp.core.errors import DomainError, MaippError
from maipp.core.field import grid_points
from maipp.core.geometry import as_points

# Set up logging
logger = logging.getLogger(__name__)

_SQRT3 = np.sqrt(3.0)
_MAX_JITTER = 1e-4


def matern32(d, hyper: GPHyperParams):
    """Matern 3/2 covariance at distance ``d`` (scalar or array)."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise DomainError("kernel distance must be non-negative")
    r = _SQRT3 * d / hyper.lengthscale
    k = hyper.signal_variance * (1.0 + r) * np.exp(-r)
    return float(k) if k.ndim == 0 else k


def kernel_matrix(A: np.ndarray, B: np.ndarray, hyper: GPHyperParams) -> np.ndarray:
    A, B = as_points(A), as_points(B)
    if len(A) == 0 or len(B) == 0:
        return np.zeros((len(A), len(B)))
    return matern32(cdist(A, B), hyper)


def _stable_cholesky(K: np.ndarray, base_noise: float) -> Tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``K + noise*I``, escalating jitter if needed."""
    noise = base_noise
    eye = np.eye(len(K))
    while True:
        try:
            c, _ = cho_factor(K + noise * eye, lower=True, check_finite=True)
            return np.tril(c), noise
        except LinAlgError:
            if noise - base_noise >= _MAX_JITTER:
                raise MaippError("Gram matrix is not positive definite even with maximal jitter")
            extra = max((noise - base_noise) * 10.0, 1e-8)
            noise = base_noise + extra
            logger.warning(f"Cholesky failed, retrying with extra jitter {extra:.1e}")


class BeliefState:
    """
    GP training set plus its posterior over a fixed grid.

    Instances behave as values: ``with_measurements`` returns a new belief and
    cached factorizations are never invalidated because nothing mutates.
    """

    __slots__ = ("X", "Y", "hyper", "grid", "_L", "_noise", "_alpha", "_V_grid", "_posterior")

    def __init__(
        self,
        X: Optional[np.ndarray] = None,
        Y: Optional[np.ndarray] = None,
        hyper: GPHyperParams = GPHyperParams(),
        grid: Optional[np.ndarray] = None,
    ):
        self.X = as_points(X if X is not None else [])
        self.Y = np.asarray(Y if Y is not None else [], dtype=float).reshape(-1)
        if len(self.X) != len(self.Y):
            raise DomainError(f"|X|={len(self.X)} does not match |Y|={len(self.Y)}")
        self.hyper = hyper
        self.grid = grid_points(30) if grid is None else as_points(grid)
        self._L: Optional[np.ndarray] = None
        self._noise = hyper.noise_variance + hyper.jitter
        self._alpha: Optional[np.ndarray] = None
        self._V_grid: Optional[np.ndarray] = None
        self._posterior: Optional[Tuple[np.ndarray, np.ndarray]] = None

    @classmethod
    def empty(cls, hyper: GPHyperParams = GPHyperParams(), resolution: int = 30) -> "BeliefState":
        return cls(hyper=hyper, grid=grid_points(resolution))

    def __len__(self) -> int:
        return len(self.X)

    def with_measurements(self, locations, values) -> "BeliefState":
        locs = as_points(locations)
        vals = np.asarray(values, dtype=float).reshape(-1)
        return BeliefState(
            np.vstack([self.X, locs]), np.concatenate([self.Y, vals]), self.hyper, self.grid
        )

    # --- factorization -------------------------------------------------

    def _factor(self) -> np.ndarray:
        if self._L is None:
            if len(self.X) == 0:
                self._L = np.zeros((0, 0))
            else:
                K = kernel_matrix(self.X, self.X, self.hyper)
                self._L, self._noise = _stable_cholesky(K, self.hyper.noise_variance + self.hyper.jitter)
        return self._L

    def _whiten(self, points: np.ndarray) -> np.ndarray:
        """``L^-1 K(X, points)``, shape ``(n, len(points))``."""
        L = self._factor()
        if len(self.X) == 0:
            return np.zeros((0, len(points)))
        return solve_triangular(L, kernel_matrix(self.X, points, self.hyper), lower=True)

    def _grid_whitened(self) -> np.ndarray:
        if self._V_grid is None:
            self._V_grid = self._whiten(self.grid)
        return self._V_grid

    def _weights(self) -> np.ndarray:
        if self._alpha is None:
            L = self._factor()
            if len(self.X) == 0:
                self._alpha = np.zeros(0)
            else:
                self._alpha = cho_solve((L, True), self.Y)
        return self._alpha

    # --- posterior -----------------------------------------------------

    def posterior(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Posterior mean and covariance over the grid with a zero prior mean.

        Returns:
            Tuple of (mu with one entry per grid cell, P as a dense symmetric matrix)
        """
        if self._posterior is None:
            mu = self.mean(self.grid)
            V = self._grid_whitened()
            P = kernel_matrix(self.grid, self.grid, self.hyper) - V.T @ V
            P = 0.5 * (P + P.T)
            self._posterior = (mu, P)
        mu, P = self._posterior
        return mu.copy(), P.copy()

    def mean(self, points) -> np.ndarray:
        pts = as_points(points)
        if len(self.X) == 0:
            return np.zeros(len(pts))
        return kernel_matrix(pts, self.X, self.hyper) @ self._weights()

    def grid_mean(self) -> np.ndarray:
        return self.mean(self.grid)

    def grid_variance(self) -> np.ndarray:
        """Diagonal of the posterior covariance without forming the full matrix."""
        V = self._grid_whitened()
        return self.hyper.signal_variance - np.sum(V * V, axis=0)

    def trace(self) -> float:
        return float(np.sum(self.grid_variance()))

    # --- hypothetical conditioning -------------------------------------

    def _virtual_factor(self, extra: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Whitened extra locations and the Cholesky factor of their innovation matrix."""
        Vz = self._whiten(extra)
        S = kernel_matrix(extra, extra, self.hyper) - Vz.T @ Vz
        S = 0.5 * (S + S.T)
        Ls, _ = _stable_cholesky(S, self._noise)
        return Vz, Ls

    def _cross_whitened(self, points: np.ndarray, Vp: np.ndarray, extra: np.ndarray, Vz: np.ndarray, Ls: np.ndarray) -> np.ndarray:
        C = kernel_matrix(extra, points, self.hyper) - Vz.T @ Vp
        return solve_triangular(Ls, C, lower=True)

    def hypothetical_covariance(self, extra_locations: Sequence[Sequence[float]]) -> np.ndarray:
        """Grid covariance as if measurements had also been taken at ``extra_locations``."""
        extra = as_points(extra_locations)
        _, P = self.posterior()
        if len(extra) == 0:
            return P
        _check_unit_square(extra)
        Vz, Ls = self._virtual_factor(extra)
        W = self._cross_whitened(self.grid, self._grid_whitened(), extra, Vz, Ls)
        P = P - W.T @ W
        return 0.5 * (P + P.T)

    def hypothetical_variance(self, points, extra_locations: Sequence[Sequence[float]] = ()) -> np.ndarray:
        """Posterior variance at ``points`` after virtual measurements at ``extra_locations``."""
        pts = as_points(points)
        Vp = self._whiten(pts)
        var = self.hyper.signal_variance - np.sum(Vp * Vp, axis=0)
        extra = as_points(extra_locations)
        if len(extra) == 0:
            return var
        Vz, Ls = self._virtual_factor(extra)
        W = self._cross_whitened(pts, Vp, extra, Vz, Ls)
        return var - np.sum(W * W, axis=0)

    def hypothetical_grid_variance(self, extra_locations: Sequence[Sequence[float]] = ()) -> np.ndarray:
        extra = as_points(extra_locations)
        var = self.grid_variance()
        if len(extra) == 0:
            return var
        Vz, Ls = self._virtual_factor(extra)
        W = self._cross_whitened(self.grid, self._grid_whitened(), extra, Vz, Ls)
        return var - np.sum(W * W, axis=0)

    def hypothetical_trace(self, extra_locations: Sequence[Sequence[float]] = ()) -> float:
        return float(np.sum(self.hypothetical_grid_variance(extra_locations)))

    def predict(self, points, extra_locations: Sequence[Sequence[float]] = ()) -> Tuple[np.ndarray, np.ndarray]:
        """
        GP mean and variance evaluated directly at arbitrary points.

        Virtual measurements shrink the variance but leave the mean untouched,
        since their values are unknown.
        """
        pts = as_points(points)
        var = self.hypothetical_variance(pts, extra_locations)
        return self.mean(pts), np.maximum(var, 0.0)


def _check_unit_square(points: np.ndarray) -> None:
    if np.any(points < -1e-12) or np.any(points > 1.0 + 1e-12):
        raise DomainError("virtual measurement locations must lie in [0,1]^2")


def high_interest_set(mu: np.ndarray, P: np.ndarray, mu_th: float, beta: float) -> np.ndarray:
    """
    Grid indices whose upper confidence bound reaches the interest threshold.

    Args:
        mu: Posterior mean per grid cell
        P: Posterior covariance matrix, or its diagonal
        mu_th: High-interest threshold
        beta: Weight of the variance in the confidence bound

    Returns:
        Sorted array of indices ``i`` with ``mu[i] + beta * P[i, i] >= mu_th``
    """
    if mu_th <= 0 or beta <= 0:
        raise DomainError("mu_th and beta must be positive")
    var = np.diag(P) if np.ndim(P) == 2 else np.asarray(P)
    return np.flatnonzero(np.asarray(mu) + beta * var >= mu_th)


def info_gain(P_before: np.ndarray, P_after: np.ndarray, interest_idx) -> float:
    """Uncertainty reduction restricted to ``interest_idx``."""
    before = np.diag(P_before) if np.ndim(P_before) == 2 else np.asarray(P_before)
    after = np.diag(P_after) if np.ndim(P_after) == 2 else np.asarray(P_after)
    idx = np.asarray(interest_idx, dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= min(len(before), len(after))):
        raise DomainError("interest indices out of range")
    return float(np.sum(before[idx]) - np.sum(after[idx]))

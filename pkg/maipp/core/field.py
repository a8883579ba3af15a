# maipp/core/field.py

"""
Hidden ground-truth interest field.

The field is a mixture of isotropic 2D Gaussians over the unit square,
scaled so that its maximum over the inference grid equals one.
"""

import logging
from functools import cached_property
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, Field

from maipp.core.config import FieldConfig
from maipp.core.errors import DomainError
from maipp.core.geometry import check_in_domain
from maipp.core.models import GaussianComponent

# Set up logging
logger = logging.getLogger(__name__)


def grid_points(resolution: int = 30) -> np.ndarray:
    """Cell centers of a ``resolution x resolution`` grid over [0,1]^2, row-major (y, then x)."""
    centers = (np.arange(resolution) + 0.5) / resolution
    xs, ys = np.meshgrid(centers, centers)
    return np.column_stack([xs.ravel(), ys.ravel()])


def mixture_density(components: Sequence[GaussianComponent], locs: np.ndarray) -> np.ndarray:
    """Raw (unnormalized) mixture density at each row of ``locs``."""
    locs = np.atleast_2d(np.asarray(locs, dtype=float))
    means = np.array([c.mean for c in components], dtype=float)
    stds = np.array([c.std for c in components], dtype=float)
    weights = np.array([c.weight for c in components], dtype=float)
    sq = np.sum((locs[:, None, :] - means[None, :, :]) ** 2, axis=2)
    dens = weights / (2.0 * np.pi * stds**2) * np.exp(-sq / (2.0 * stds**2))
    return dens.sum(axis=1)


class GroundTruth(BaseModel):
    """The hidden interest map; immutable once built."""
    components: List[GaussianComponent]
    normalizer: float = Field(gt=0)
    resolution: int = 30

    model_config = {"frozen": True}

    @cached_property
    def grid(self) -> np.ndarray:
        return grid_points(self.resolution)

    @classmethod
    def from_components(cls, components: List[GaussianComponent], resolution: int = 30) -> "GroundTruth":
        """Builds a field whose maximum over the grid cell centers is exactly one."""
        raw = mixture_density(components, grid_points(resolution))
        return cls(components=components, normalizer=float(raw.max()), resolution=resolution)

    def query(self, loc: Sequence[float]) -> float:
        """Normalized interest at one location in [0,1]^2."""
        p = check_in_domain(loc)
        return float(self.query_many(p[None, :])[0])

    def query_many(self, locs: np.ndarray) -> np.ndarray:
        """Vectorized ``query``; values off the grid are capped at 1."""
        locs = np.atleast_2d(np.asarray(locs, dtype=float))
        if np.any(locs < -1e-12) or np.any(locs > 1.0 + 1e-12):
            raise DomainError("query locations must lie in [0,1]^2")
        return np.minimum(mixture_density(self.components, locs) / self.normalizer, 1.0)

    def grid_values(self) -> np.ndarray:
        return self.query_many(self.grid)

    def measure(self, loc: Sequence[float], noise_std: float, rng: np.random.Generator) -> float:
        """Noisy point measurement: the interest value plus zero-mean Gaussian noise."""
        if noise_std < 0:
            raise DomainError(f"noise_std must be non-negative, got {noise_std}")
        value = self.query(loc)
        if noise_std == 0:
            return value
        return value + float(rng.normal(0.0, noise_std))

    def to_records(self) -> List[dict]:
        """Serializable ``(mean, std, weight)`` records for instance replay."""
        return [c.model_dump() for c in self.components]

    @classmethod
    def from_records(cls, records: List[dict], resolution: int = 30) -> "GroundTruth":
        return cls.from_components([GaussianComponent(**r) for r in records], resolution)


def generate_ground_truth(rng: np.random.Generator, cfg: FieldConfig = FieldConfig()) -> GroundTruth:
    """
    Draws a random multi-modal interest field.

    Args:
        rng: Seedable random source; identical seeds give identical fields
        cfg: Component count, spread and weight ranges

    Returns:
        A GroundTruth normalized so that its grid maximum is 1
    """
    count = int(rng.integers(cfg.min_components, cfg.max_components + 1))
    if cfg.fixed_means is not None:
        means = np.asarray(cfg.fixed_means, dtype=float)
    else:
        means = rng.uniform(0.0, 1.0, size=(count, 2))
    stds = rng.uniform(cfg.std_min, cfg.std_max, size=count)
    weights = rng.uniform(cfg.weight_min, cfg.weight_max, size=count)
    components = [
        GaussianComponent(mean=(float(m[0]), float(m[1])), std=float(s), weight=float(w))
        for m, s, w in zip(means, stds, weights)
    ]
    logger.debug(f"Generated ground truth with {count} components")
    return GroundTruth.from_components(components, cfg.resolution)

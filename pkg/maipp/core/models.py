# maipp/core/models.py

from typing import List, Tuple

import msgpack
import numpy as np
from pydantic import BaseModel, Field, field_validator


class GaussianComponent(BaseModel):
    """One isotropic 2D Gaussian bump of the ground-truth mixture."""
    mean: Tuple[float, float]
    std: float = Field(gt=0)
    weight: float = Field(gt=0)

    model_config = {"frozen": True}


class Measurement(BaseModel):
    """A noisy point sample of the hidden field taken by one agent."""
    id: int
    agent_id: int
    time: float
    location: Tuple[float, float]
    value: float

    model_config = {"frozen": True}


class IntentMessage(BaseModel):
    """
    The broadcast summary of an agent's predicted future positions.

    Only ``[mean, cov]`` travels over the wire; receivers rebuild the Gaussian
    density themselves when they need it.
    """
    agent_id: int = Field(ge=0)
    mean: Tuple[float, float]
    cov: Tuple[Tuple[float, float], Tuple[float, float]]
    step: int = Field(0, ge=0)

    model_config = {"frozen": True}

    @field_validator("cov")
    @classmethod
    def _symmetric(cls, cov):
        if abs(cov[0][1] - cov[1][0]) > 1e-12:
            raise ValueError("intent covariance must be symmetric")
        return cov

    @property
    def mean_array(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)

    @property
    def cov_array(self) -> np.ndarray:
        return np.asarray(self.cov, dtype=float)

    def encode(self) -> bytes:
        """Packs the message as ``[agent_id, step, mx, my, c00, c01, c11]``."""
        (c00, c01), (_, c11) = self.cov
        return msgpack.packb(
            [self.agent_id, self.step, float(self.mean[0]), float(self.mean[1]),
             float(c00), float(c01), float(c11)]
        )

    @classmethod
    def decode(cls, payload: bytes) -> "IntentMessage":
        agent_id, step, mx, my, c00, c01, c11 = msgpack.unpackb(payload)
        return cls(agent_id=agent_id, step=step, mean=(mx, my), cov=((c00, c01), (c01, c11)))


def measurements_to_arrays(records: List[Measurement]) -> Tuple[np.ndarray, np.ndarray]:
    """Stacks measurement records (sorted by id) into ``(X, Y)`` arrays."""
    ordered = sorted(records, key=lambda r: r.id)
    if not ordered:
        return np.zeros((0, 2)), np.zeros(0)
    X = np.array([r.location for r in ordered], dtype=float)
    Y = np.array([r.value for r in ordered], dtype=float)
    return X, Y

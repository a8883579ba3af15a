# maipp/io/persistence.py

"""
Binary artifacts: policy checkpoints, worlds and episode dumps.

Everything is a msgpack map written atomically (temporary file, then rename),
so a crashed run never leaves a half-written checkpoint behind.
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import msgpack
import numpy as np
import torch

from maipp.core.config import PolicyConfig
from maipp.core.errors import CheckpointError
from maipp.core.field import GroundTruth
from maipp.policy.network import PolicyNet
from maipp.sim.episode import EpisodeMetrics

# Set up logging
logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
EPISODE_VERSION = 1


def _atomic_write(path: Path, payload: Dict[str, Any]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    packed = msgpack.packb(payload, use_bin_type=True)
    tmp_file = path.with_suffix(path.suffix + ".tmp")
    with open(tmp_file, "wb") as f:
        f.write(packed)
    os.replace(tmp_file, path)


def _read(path: Path, kind: str) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"{kind} file {path} does not exist")
    try:
        with open(path, "rb") as f:
            payload = msgpack.unpackb(f.read(), raw=False, strict_map_key=False)
    except ValueError as e:
        raise CheckpointError(f"{kind} file {path} is malformed: {e}") from e
    if not isinstance(payload, dict):
        raise CheckpointError(f"{kind} file {path} is malformed: expected a map")
    return payload


def _pack_array(arr: np.ndarray) -> Dict[str, Any]:
    arr = np.ascontiguousarray(arr)
    return {"shape": list(arr.shape), "dtype": str(arr.dtype), "data": arr.tobytes()}


def _unpack_array(entry: Dict[str, Any]) -> np.ndarray:
    return np.frombuffer(entry["data"], dtype=np.dtype(entry["dtype"])).reshape(entry["shape"]).copy()


# --- checkpoints ---------------------------------------------------------------


def save_checkpoint(path: Path, net: PolicyNet, cfg: Optional[PolicyConfig] = None, update: int = 0) -> None:
    """Saves every named tensor of ``net`` with its shape and dtype."""
    cfg = cfg or net.cfg
    tensors = {name: _pack_array(t.detach().cpu().numpy()) for name, t in net.state_dict().items()}
    _atomic_write(path, {
        "version": CHECKPOINT_VERSION,
        "config": cfg.model_dump(),
        "update": update,
        "tensors": tensors,
    })
    logger.info(f"Checkpoint saved to {path}")


def load_checkpoint(path: Path) -> Tuple[PolicyNet, Dict[str, Any]]:
    """
    Rebuilds a network from a checkpoint, bit for bit.

    Returns:
        Tuple of (network in eval mode, metadata with ``version``, ``config`` and ``update``)

    Raises:
        CheckpointError: if the file is missing, malformed, of another
            version, or its tensors do not fit the stored config
    """
    payload = _read(path, "checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"checkpoint {path} has version {payload.get('version')}, expected {CHECKPOINT_VERSION}")
    try:
        cfg = PolicyConfig(**payload["config"])
        net = PolicyNet(cfg)
        state = {name: torch.from_numpy(_unpack_array(entry)) for name, entry in payload["tensors"].items()}
        net.load_state_dict(state, strict=True)
    except (KeyError, TypeError, RuntimeError, ValueError) as e:
        raise CheckpointError(f"checkpoint {path} does not match its config: {e}") from e
    net.eval()
    meta = {k: payload[k] for k in ("version", "config", "update") if k in payload}
    return net, meta


# --- worlds --------------------------------------------------------------------


def save_world(path: Path, world: GroundTruth, start: Optional[np.ndarray] = None, **meta: Any) -> None:
    _atomic_write(path, {
        "components": world.to_records(),
        "resolution": world.resolution,
        "start": None if start is None else [float(v) for v in start],
        "meta": meta,
    })


def load_world(path: Path) -> Tuple[GroundTruth, Optional[np.ndarray]]:
    payload = _read(path, "world")
    try:
        world = GroundTruth.from_records(payload["components"], payload.get("resolution", 30))
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"world file {path} is malformed: {e}") from e
    start = payload.get("start")
    return world, None if start is None else np.asarray(start, dtype=float)


# --- episode dumps -------------------------------------------------------------


@dataclass
class EpisodeDump:
    """What the plotting commands need from a finished episode."""
    method: str
    trace_final: float
    resolution: int
    trajectories: List[np.ndarray]
    curve: np.ndarray
    final_mean: np.ndarray
    final_variance: np.ndarray
    world: Optional[List[Dict[str, Any]]] = None


def save_episode(path: Path, metrics: EpisodeMetrics, method: str, world: Optional[GroundTruth] = None) -> None:
    resolution = int(round(np.sqrt(len(metrics.final_mean))))
    _atomic_write(path, {
        "version": EPISODE_VERSION,
        "method": method,
        "trace_final": metrics.trace_final,
        "resolution": resolution,
        "trajectories": [np.asarray(t, dtype=float).tolist() for t in metrics.trajectories],
        "node_paths": metrics.node_paths,
        "curve": [list(row) for row in metrics.curve],
        "final_mean": _pack_array(metrics.final_mean),
        "final_variance": _pack_array(metrics.final_variance),
        "measurements": [r.model_dump() for r in metrics.measurements],
        "world": None if world is None else world.to_records(),
    })


def load_episode(path: Path) -> EpisodeDump:
    payload = _read(path, "episode")
    if payload.get("version") != EPISODE_VERSION:
        raise CheckpointError(f"episode dump {path} has version {payload.get('version')}")
    try:
        return EpisodeDump(
            method=payload["method"],
            trace_final=float(payload["trace_final"]),
            resolution=int(payload["resolution"]),
            trajectories=[np.asarray(t, dtype=float).reshape(-1, 2) for t in payload["trajectories"]],
            curve=np.asarray(payload["curve"], dtype=float).reshape(-1, 3),
            final_mean=_unpack_array(payload["final_mean"]),
            final_variance=_unpack_array(payload["final_variance"]),
            world=payload.get("world"),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"episode dump {path} is malformed: {e}") from e

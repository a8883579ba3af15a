# maipp/io/export.py

"""CSV exports for plotting and result tables."""

from dataclasses import asdict
from pathlib import Path
from typing import List, Sequence

import numpy as np
import pandas as pd

from maipp.core.errors import DomainError
from maipp.core.roadmap import WaypointGraph

RESULT_COLUMNS = ["instance", "trial", "method", "m", "B", "comm_range", "trace_final", "wall_ms"]


def write_grid_csv(path: Path, values: np.ndarray, resolution: int = 30) -> None:
    """Writes a per-cell grid quantity as ``resolution`` rows of ``resolution`` values."""
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size != resolution * resolution:
        raise DomainError(f"expected {resolution * resolution} grid values, got {values.size}")
    pd.DataFrame(values.reshape(resolution, resolution)).to_csv(path, header=False, index=False)


def read_grid_csv(path: Path) -> np.ndarray:
    return pd.read_csv(path, header=None).to_numpy(dtype=float)


def write_graph_csv(nodes_path: Path, edges_path: Path, graph: WaypointGraph) -> None:
    pd.DataFrame({"node": np.arange(graph.n), "x": graph.nodes[:, 0], "y": graph.nodes[:, 1]}).to_csv(
        nodes_path, index=False
    )
    pd.DataFrame(list(graph.edges()), columns=["u", "v", "length"]).to_csv(edges_path, index=False)


def write_trajectories_csv(path: Path, trajectories: Sequence[np.ndarray]) -> None:
    rows = [
        {"agent": agent, "step": step, "x": float(p[0]), "y": float(p[1])}
        for agent, traj in enumerate(trajectories)
        for step, p in enumerate(np.asarray(traj, dtype=float).reshape(-1, 2))
    ]
    pd.DataFrame(rows, columns=["agent", "step", "x", "y"]).to_csv(path, index=False)


def results_frame(rows: List) -> pd.DataFrame:
    """Result rows (TrialResult dataclasses) as a frame with the stable column order."""
    return pd.DataFrame([asdict(r) for r in rows], columns=RESULT_COLUMNS)


def write_results_csv(path: Path, rows: List) -> pd.DataFrame:
    frame = results_frame(rows)
    frame.to_csv(path, index=False, lineterminator="\n")
    return frame


def summarize(frame: pd.DataFrame) -> pd.DataFrame:
    """Mean, standard deviation and count of the final trace per method, team size, budget and range."""
    grouped = frame.groupby(["method", "m", "B", "comm_range"], sort=False)["trace_final"]
    summary = grouped.agg(["mean", "std", "count"]).reset_index()
    return summary.rename(columns={"mean": "trace_mean", "std": "trace_std", "count": "episodes"})

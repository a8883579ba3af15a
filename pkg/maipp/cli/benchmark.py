# maipp/cli/benchmark.py

"""
The benchmark grid: every method on every (instance, trial), for each budget
and communication range in the config.

Work is split across processes by (instance, trial). Rows are sorted before
the single writer emits them, so the CSV does not depend on ``jobs``.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import pandas as pd
from rich.progress import track
from rich.table import Table

from maipp.core.config import ExperimentConfig
from maipp.core.errors import CheckpointError
from maipp.io.export import results_frame, summarize, write_results_csv
from maipp.io.persistence import load_checkpoint
from maipp.planners.registry import parse_method
from maipp.policy.network import PolicyNet
from maipp.sim.instances import make_instance
from maipp.train.evaluate import TrialResult, run_trial

# Set up logging
logger = logging.getLogger(__name__)


@dataclass
class BenchmarkOutcome:
    rows: List[TrialResult]
    results: pd.DataFrame
    summary: pd.DataFrame
    results_path: Optional[Path] = None
    summary_path: Optional[Path] = None


def load_policy_for(cfg: ExperimentConfig, checkpoint: Optional[Path] = None) -> Optional[PolicyNet]:
    """
    Loads the checkpoint when any configured method is learned.

    Raises:
        CheckpointError: if a learned method is configured without a checkpoint
    """
    if not any(parse_method(label).learned for label in cfg.methods):
        return None
    path = checkpoint or cfg.checkpoint
    if path is None:
        raise CheckpointError("learned methods need --checkpoint or 'checkpoint' in the config")
    net, meta = load_checkpoint(Path(path))
    logger.info(f"Loaded policy from {path} (update {meta.get('update', 0)})")
    return net


def _cell(args) -> List[TrialResult]:
    cfg, net, instance_id, trial = args
    inst = make_instance(cfg.seed, instance_id, cfg.episode.m, cfg.field, cfg.graph, cfg.episode.random_start)
    rows = []
    for budget in cfg.budgets:
        for comm_range in cfg.comm_ranges:
            for method in cfg.methods:
                result, _ = run_trial(cfg, method, instance_id, trial, budget, comm_range, net, inst)
                rows.append(result)
    return rows


def _order_key(cfg: ExperimentConfig):
    method_order = {parse_method(label).label: k for k, label in enumerate(cfg.methods)}
    budget_order = {b: k for k, b in enumerate(cfg.budgets)}
    range_order = {r: k for k, r in enumerate(cfg.comm_ranges)}

    def key(row: TrialResult) -> Tuple[int, int, int, int, int]:
        return (budget_order[row.B], range_order[row.comm_range], row.instance, row.trial, method_order[row.method])

    return key


def run_benchmark(
    cfg: ExperimentConfig,
    jobs: int = 1,
    checkpoint: Optional[Path] = None,
    out_dir: Optional[Path] = None,
    show_progress: bool = False,
) -> BenchmarkOutcome:
    """
    Runs the full grid and aggregates the final traces.

    Args:
        cfg: Methods, budgets, ranges, instance and trial counts, seed
        jobs: Worker processes; results are identical for any value
        checkpoint: Overrides ``cfg.checkpoint`` for learned methods
        out_dir: Where to write the results and summary CSVs; nothing is
            written when None
        show_progress: Show a rich progress bar

    Returns:
        BenchmarkOutcome with the raw rows and the per-cell summary
    """
    net = load_policy_for(cfg, checkpoint)
    cells = [(cfg, net, i, t) for i in range(cfg.instances) for t in range(cfg.trials)]
    logger.info(
        f"Benchmark: {len(cfg.methods)} methods x {len(cfg.budgets)} budgets x {len(cfg.comm_ranges)} ranges "
        f"x {cfg.instances} instances x {cfg.trials} trials"
    )
    rows: List[TrialResult] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(_cell, cells)
            if show_progress:
                results = track(results, total=len(cells), description="Benchmark")
            for cell_rows in results:
                rows.extend(cell_rows)
    else:
        iterator = track(cells, description="Benchmark") if show_progress else cells
        for args in iterator:
            rows.extend(_cell(args))
    rows.sort(key=_order_key(cfg))

    outcome = BenchmarkOutcome(rows=rows, results=pd.DataFrame(), summary=pd.DataFrame())
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        outcome.results_path = out_dir / cfg.output.results_csv
        outcome.results = write_results_csv(outcome.results_path, rows)
        outcome.summary = summarize(outcome.results)
        outcome.summary_path = out_dir / cfg.output.summary_csv
        outcome.summary.to_csv(outcome.summary_path, index=False, lineterminator="\n")
    else:
        outcome.results = results_frame(rows)
        outcome.summary = summarize(outcome.results)
    return outcome


def summary_table(summary: pd.DataFrame) -> Table:
    """The summary frame as a rich table, one row per method and setting."""
    table = Table(title="Final uncertainty Tr(P_f)")
    for column in ("method", "m", "B", "comm_range", "mean", "std", "episodes"):
        table.add_column(column, justify="left" if column == "method" else "right")
    for row in summary.itertuples(index=False):
        std = "-" if pd.isna(row.trace_std) else f"{row.trace_std:.2f}"
        table.add_row(
            row.method, str(row.m), f"{row.B:g}", f"{row.comm_range:g}",
            f"{row.trace_mean:.2f}", std, str(row.episodes),
        )
    return table

import math

import msgpack
import numpy as np
import pandas as pd
import pytest
import torch

from maipp.core.config import EpisodeConfig, GraphConfig
from maipp.core.errors import CheckpointError, DomainError
from maipp.core.field import GroundTruth
from maipp.io.export import (
    RESULT_COLUMNS,
    read_grid_csv,
    summarize,
    write_graph_csv,
    write_grid_csv,
    write_results_csv,
    write_trajectories_csv,
)
from maipp.io.persistence import (
    load_checkpoint,
    load_episode,
    load_world,
    save_checkpoint,
    save_episode,
    save_world,
)
from maipp.planners.learned import RandomController
from maipp.policy.network import PolicyNet
from maipp.sim.episode import run_episode
from maipp.sim.instances import make_instance, trial_rng
from maipp.train.evaluate import TrialResult
from tests.conftest import TINY_POLICY


def test_checkpoint_round_trip_is_bit_exact(tiny_net, tmp_path):
    path = tmp_path / "policy.ckpt"
    save_checkpoint(path, tiny_net, update=17)
    net, meta = load_checkpoint(path)
    assert meta["update"] == 17
    assert meta["version"] == 1
    assert net.cfg == TINY_POLICY
    for (name, a), (_, b) in zip(tiny_net.state_dict().items(), net.state_dict().items()):
        assert a.dtype == b.dtype == torch.float64
        assert torch.equal(a, b), name
    assert not (tmp_path / "policy.ckpt.tmp").exists()


def test_missing_checkpoint(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "nope.ckpt")


def test_malformed_checkpoint(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"\xc1\xc1 not msgpack")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    path.write_bytes(msgpack.packb([1, 2, 3]))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_checkpoint_version_mismatch(tiny_net, tmp_path):
    path = tmp_path / "policy.ckpt"
    save_checkpoint(path, tiny_net)
    payload = msgpack.unpackb(path.read_bytes(), raw=False)
    payload["version"] = 99
    path.write_bytes(msgpack.packb(payload, use_bin_type=True))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_checkpoint_config_mismatch(tiny_net, tmp_path):
    path = tmp_path / "policy.ckpt"
    save_checkpoint(path, tiny_net, cfg=TINY_POLICY.model_copy(update={"d_model": 16}))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_world_round_trip(tmp_path):
    inst = make_instance(0, 2, m=1, graph_cfg=GraphConfig(n=10, k=3))
    save_world(tmp_path / "world.msgpack", inst.world, inst.start, instance=2)
    world, start = load_world(tmp_path / "world.msgpack")
    np.testing.assert_array_equal(world.grid_values(), inst.world.grid_values())
    np.testing.assert_array_equal(start, inst.start)


@pytest.fixture
def episode():
    inst = make_instance(0, 0, m=3, graph_cfg=GraphConfig(n=20, k=4))
    cfg = EpisodeConfig(m=3, budget=1.0, comm_range=math.inf)
    return inst, run_episode(cfg, inst.world, inst.graphs, trial_rng(0, 0, 0), RandomController())


def test_episode_dump_round_trip(episode, tmp_path):
    inst, metrics = episode
    save_episode(tmp_path / "ep.msgpack", metrics, "random", inst.world)
    dump = load_episode(tmp_path / "ep.msgpack")
    assert dump.method == "random"
    assert dump.trace_final == metrics.trace_final
    assert dump.resolution == 30
    assert len(dump.trajectories) == 3
    for a, b in zip(dump.trajectories, metrics.trajectories):
        np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(dump.final_variance, metrics.final_variance)
    assert dump.curve.shape == (len(metrics.curve), 3)
    rebuilt = GroundTruth.from_records(dump.world)
    np.testing.assert_array_equal(rebuilt.grid_values(), inst.world.grid_values())


def test_grid_csv(tmp_path):
    values = np.arange(900, dtype=float) / 7.0
    write_grid_csv(tmp_path / "grid.csv", values)
    grid = read_grid_csv(tmp_path / "grid.csv")
    assert grid.shape == (30, 30)
    np.testing.assert_array_equal(grid.ravel(), values)
    with pytest.raises(DomainError):
        write_grid_csv(tmp_path / "bad.csv", np.zeros(10))


def test_graph_and_trajectory_csv(small_graph, tmp_path):
    write_graph_csv(tmp_path / "nodes.csv", tmp_path / "edges.csv", small_graph)
    nodes = pd.read_csv(tmp_path / "nodes.csv")
    edges = pd.read_csv(tmp_path / "edges.csv")
    assert len(nodes) == small_graph.n
    assert len(edges) == len(list(small_graph.edges()))
    assert list(edges.columns) == ["u", "v", "length"]
    write_trajectories_csv(tmp_path / "traj.csv", [small_graph.nodes[:3], small_graph.nodes[:2]])
    traj = pd.read_csv(tmp_path / "traj.csv")
    assert list(traj["agent"]) == [0, 0, 0, 1, 1]


def rows():
    out = []
    for trial in range(3):
        for method, trace in (("random", 800.0 + trial), ("RRT(0.3,0.4)", 20.0 + 2 * trial)):
            out.append(TrialResult(0, trial, method, 3, 3.0, math.inf, trace, 0.0))
    return out


def test_results_header_is_stable(tmp_path):
    write_results_csv(tmp_path / "results.csv", rows())
    header = (tmp_path / "results.csv").read_text().splitlines()[0]
    assert header == "instance,trial,method,m,B,comm_range,trace_final,wall_ms"
    assert header.split(",") == RESULT_COLUMNS


def test_summary_matches_recomputation(tmp_path):
    frame = write_results_csv(tmp_path / "results.csv", rows())
    summary = summarize(frame).set_index("method")
    for method in ("random", "RRT(0.3,0.4)"):
        traces = [r.trace_final for r in rows() if r.method == method]
        assert summary.loc[method, "trace_mean"] == pytest.approx(np.mean(traces))
        assert summary.loc[method, "trace_std"] == pytest.approx(np.std(traces, ddof=1))
        assert summary.loc[method, "episodes"] == 3

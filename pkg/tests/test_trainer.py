import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import torch

from maipp.cli.config import load_config
from maipp.core.config import EpisodeConfig, ExperimentConfig, GraphConfig, TrainConfig
from maipp.core.errors import DomainError, TrainingDivergence
from maipp.policy.network import PolicyNet
from maipp.sim.instances import make_instance
from maipp.train.evaluate import evaluate_variant, run_trial
from maipp.train.ppo import Trainer, build_batch, compute_gae, make_optimizer, ppo_loss, ppo_update
from maipp.train.rollouts import RolloutBuffer, collect_rollouts
from tests.conftest import TINY_POLICY

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def mini_cfg(tmp_path):
    return ExperimentConfig(
        graph=GraphConfig(n=10, k=4),
        policy=TINY_POLICY,
        episode=EpisodeConfig(m=2, budget=1.0),
        train=TrainConfig(variant="TI(2,2)", batch_size=16, ppo_epochs=1, episodes_per_update=1,
                          n_updates=2, checkpoint_every=1, lr=1e-3),
        instances=2,
        trials=1,
        seed=1,
        output={"directory": tmp_path},
    )


@pytest.fixture
def buffer(mini_cfg, tiny_net):
    return collect_rollouts(tiny_net, mini_cfg, 2, np.random.default_rng(0))


def test_gae_matches_hand_computation():
    rewards, values = [1.0, 0.0, 2.0], [0.5, 0.2, 0.1]
    adv, ret = compute_gae(rewards, values, [False, False, True], gamma=0.9, lam=0.8)
    d2 = 2.0 - 0.1
    d1 = 0.0 + 0.9 * 0.1 - 0.2
    d0 = 1.0 + 0.9 * 0.2 - 0.5
    expected = [d0 + 0.72 * (d1 + 0.72 * d2), d1 + 0.72 * d2, d2]
    np.testing.assert_allclose(adv, expected)
    np.testing.assert_allclose(ret, np.asarray(expected) + values)


def test_gae_lambda_one_gives_monte_carlo_returns():
    rewards = [0.1, 0.2, 0.3]
    _, ret = compute_gae(rewards, [0.0, 5.0, -1.0], [False, False, True], gamma=1.0, lam=1.0)
    np.testing.assert_allclose(ret, [0.6, 0.5, 0.3])


def test_rollouts_segments_and_flags(buffer):
    assert len(buffer) > 0
    assert len(buffer.episode_returns) == 2
    covered = 0
    for start, stop in buffer.segments:
        seg = buffer.transitions[start:stop]
        assert len({t.agent_id for t in seg}) == 1
        assert [t.done for t in seg] == [False] * (len(seg) - 1) + [True]
        covered += stop - start
    assert covered == len(buffer)
    assert all(t.log_prob <= 0 and np.isfinite(t.log_prob) for t in buffer.transitions)


def test_step_rewards_bounded(buffer):
    for seg_start, seg_stop in buffer.segments:
        for t in buffer.transitions[seg_start:seg_stop - 1]:
            assert -1e-9 <= t.reward <= 1.0 + 1e-9


def test_rollouts_reproducible(mini_cfg, tiny_net):
    a = collect_rollouts(tiny_net, mini_cfg, 1, np.random.default_rng(3))
    b = collect_rollouts(tiny_net, mini_cfg, 1, np.random.default_rng(3))
    assert [t.action for t in a.transitions] == [t.action for t in b.transitions]
    assert a.episode_returns == b.episode_returns


def test_clipped_ratio(buffer, tiny_net, mini_cfg):
    cfg = mini_cfg.train.model_copy(update={"normalize_advantages": False, "value_coef": 0.0, "entropy_coef": 0.0})
    batch = build_batch(buffer, cfg)
    with torch.no_grad():
        current = tiny_net(batch.inputs, batch.states).log_probs.gather(1, batch.actions.unsqueeze(1)).squeeze(1)
    batch.old_log_probs = current - math.log(1.5)
    batch.advantages = torch.ones_like(batch.advantages)
    _, diag = ppo_loss(tiny_net, batch, cfg)
    assert diag["policy_loss"] == pytest.approx(-1.2, abs=1e-12)
    assert diag["ratio_max"] == pytest.approx(1.5, abs=1e-12)


def test_zero_advantages_leave_only_value_and_entropy(buffer, tiny_net, mini_cfg):
    cfg = mini_cfg.train.model_copy(update={"normalize_advantages": False})
    batch = build_batch(buffer, cfg)
    batch.advantages = torch.zeros_like(batch.advantages)
    _, diag = ppo_loss(tiny_net, batch, cfg)
    assert diag["policy_loss"] == 0.0
    assert diag["loss"] == pytest.approx(cfg.value_coef * diag["value_loss"] - cfg.entropy_coef * diag["entropy"])


def test_unclipped_gradient_equals_vanilla_policy_gradient(buffer, tiny_net, mini_cfg):
    cfg = mini_cfg.train.model_copy(update={"value_coef": 0.0, "entropy_coef": 0.0})
    batch = build_batch(buffer, cfg)
    with torch.no_grad():
        batch.old_log_probs = tiny_net(batch.inputs, batch.states).log_probs.gather(
            1, batch.actions.unsqueeze(1)).squeeze(1)
    tiny_net.zero_grad()
    ppo_loss(tiny_net, batch, cfg)[0].backward()
    ppo_grads = [p.grad.clone() for p in tiny_net.parameters()]

    tiny_net.zero_grad()
    out = tiny_net(batch.inputs, batch.states)
    log_probs = out.log_probs.gather(1, batch.actions.unsqueeze(1)).squeeze(1)
    (-(batch.advantages * log_probs).mean()).backward()
    for g_ppo, p in zip(ppo_grads, tiny_net.parameters()):
        torch.testing.assert_close(g_ppo, p.grad, rtol=1e-10, atol=1e-12)


def test_single_transition_update_matches_oracle(buffer, tiny_net, mini_cfg):
    cfg = mini_cfg.train.model_copy(update={"normalize_advantages": False, "ppo_epochs": 1, "batch_size": 1})
    single = RolloutBuffer()
    first = buffer.transitions[0]
    first.done = True
    single.extend([first], 1, 0.0, 0.0)
    batch = build_batch(single, cfg)

    tiny_net.zero_grad()
    loss, _ = ppo_loss(tiny_net, batch, cfg)
    loss.backward()
    grads = {name: p.grad.clone() for name, p in tiny_net.named_parameters()}
    before = {name: p.detach().clone() for name, p in tiny_net.named_parameters()}

    # finite differences of the total loss agree with autograd
    name = "pointer_q.weight"
    param = dict(tiny_net.named_parameters())[name]
    with torch.no_grad():
        eps = 1e-6
        param.view(-1)[0] += eps
        plus = ppo_loss(tiny_net, batch, cfg)[0].item()
        param.view(-1)[0] -= 2 * eps
        minus = ppo_loss(tiny_net, batch, cfg)[0].item()
        param.view(-1)[0] += eps
    assert (plus - minus) / (2 * eps) == pytest.approx(grads[name].view(-1)[0].item(), rel=1e-5, abs=1e-9)

    optimizer, scheduler = make_optimizer(tiny_net, cfg)
    ppo_update(tiny_net, single, cfg, optimizer, scheduler, np.random.default_rng(0))
    for name, p in tiny_net.named_parameters():
        g = grads[name]
        expected = before[name] - cfg.lr * g / (g.abs() + 1e-8)
        torch.testing.assert_close(p.detach(), expected, rtol=0, atol=1e-12)


def test_learning_rate_schedule():
    net = PolicyNet(TINY_POLICY)
    optimizer, scheduler = make_optimizer(net, TrainConfig())
    for _ in range(64):
        optimizer.step()
        scheduler.step()
    assert optimizer.param_groups[0]["lr"] == pytest.approx(5e-5 * 0.96**2, rel=1e-12)


def test_non_finite_loss_raises(buffer, tiny_net, mini_cfg):
    optimizer, scheduler = make_optimizer(tiny_net, mini_cfg.train)
    with torch.no_grad():
        tiny_net.value_head[0].weight.fill_(float("nan"))
    with pytest.raises(TrainingDivergence) as info:
        ppo_update(tiny_net, buffer, mini_cfg.train, optimizer, scheduler, np.random.default_rng(0))
    assert "value_loss" in info.value.diagnostics


def test_clip_eps_validated():
    with pytest.raises(ValueError):
        TrainConfig(clip_eps=1.5)


def test_trainer_writes_log_and_checkpoints(mini_cfg, tmp_path):
    trainer = Trainer(mini_cfg)
    log = trainer.train(tmp_path)
    assert len(log) == 2
    frame = pd.read_csv(tmp_path / "training_log.csv")
    assert list(frame["update"]) == [1, 2]
    assert (tmp_path / "policy_00001.ckpt").exists()
    assert (tmp_path / "policy_00002.ckpt").exists()
    assert (tmp_path / "policy_latest.ckpt").exists()


def test_random_policy_trial_reduces_trace(mini_cfg):
    result, metrics = run_trial(mini_cfg, "random", 0, 0, budget=1.0)
    assert result.trace_final < 900
    assert result.method == "random"
    assert result.B == 1.0
    assert result.wall_ms == 0.0
    assert result.trace_final == metrics.trace_final


def test_trials_are_paired_across_methods(mini_cfg, tiny_net):
    _, a = run_trial(mini_cfg, "intent-free", 1, 0, net=tiny_net)
    _, b = run_trial(mini_cfg, "DI(2,2)", 1, 0, net=tiny_net)
    np.testing.assert_array_equal(a.trajectories[0][0], b.trajectories[0][0])


def test_trial_reuses_a_prebuilt_instance(mini_cfg):
    inst = make_instance(mini_cfg.seed, 1, mini_cfg.episode.m, mini_cfg.field, mini_cfg.graph)
    built, a = run_trial(mini_cfg, "random", 1, 0)
    reused, b = run_trial(mini_cfg, "random", 1, 0, instance=inst)
    assert built == reused
    assert a.node_paths == b.node_paths
    with pytest.raises(DomainError):
        run_trial(mini_cfg, "random", 0, 0, instance=inst)


def test_evaluate_variant(mini_cfg):
    score = evaluate_variant(None, "random", mini_cfg)
    assert len(score.traces) == mini_cfg.instances * mini_cfg.trials
    assert score.mean == pytest.approx(np.mean(score.traces))
    assert score.std == pytest.approx(np.std(score.traces))


@pytest.mark.slow
def test_miniature_training_beats_random_policy(tmp_path):
    cfg = load_config(CONFIGS / "miniature.yaml", out=tmp_path)
    assert cfg.train.n_updates == 200 and cfg.graph.n == 10
    assert (cfg.episode.m, cfg.episode.budget) == (2, 1.0)
    trainer = Trainer(cfg)
    untrained = PolicyNet(cfg.policy)
    untrained.load_state_dict(trainer.net.state_dict())
    paired_seed = 2024
    before = collect_rollouts(untrained, cfg, 32, np.random.default_rng(paired_seed))
    trainer.train(tmp_path)
    after = collect_rollouts(trainer.net, cfg, 32, np.random.default_rng(paired_seed))
    assert after.mean_return > before.mean_return

    held_cfg = cfg.model_copy(update={"seed": 1234})
    assert held_cfg.greedy
    trained = evaluate_variant(trainer.net, "TI(8,3)*", held_cfg)
    random = evaluate_variant(None, "random", held_cfg)
    assert trained.mean <= 0.7 * random.mean

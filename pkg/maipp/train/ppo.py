# maipp/train/ppo.py

"""
Proximal policy optimization for the shared attention policy.

All agents feed one buffer and one network. Each stored transition keeps
the recurrent state that entered its decision, so the LSTM is trained with
one-step truncated backpropagation.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch
from torch.optim import Adam
from torch.optim.lr_scheduler import StepLR

from maipp.core.config import ExperimentConfig, TrainConfig
from maipp.core.errors import DomainError, TrainingDivergence
from maipp.io.persistence import save_checkpoint
from maipp.policy.network import DTYPE, PolicyNet, RecurrentState, masked_entropy
from maipp.policy.observation import collate, stack_states
from maipp.train.rollouts import RolloutBuffer, collect_rollouts

# Set up logging
logger = logging.getLogger(__name__)


def compute_gae(
    rewards: Sequence[float],
    values: Sequence[float],
    dones: Sequence[bool],
    gamma: float = 1.0,
    lam: float = 0.95,
    last_value: float = 0.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Generalized advantage estimates for one agent's decision sequence.

    Returns:
        Tuple of (advantages, returns) where ``returns = advantages + values``
    """
    n = len(rewards)
    adv = np.zeros(n)
    gae = 0.0
    for t in reversed(range(n)):
        next_value = last_value if t == n - 1 else values[t + 1]
        not_done = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_value * not_done - values[t]
        gae = delta + gamma * lam * not_done * gae
        adv[t] = gae
    return adv, adv + np.asarray(values, dtype=float)


@dataclass
class PPOBatch:
    """A whole buffer as tensors, ready to be sliced into minibatches."""
    inputs: Dict[str, torch.Tensor]
    states: RecurrentState
    actions: torch.Tensor
    old_log_probs: torch.Tensor
    advantages: torch.Tensor
    returns: torch.Tensor

    def __len__(self) -> int:
        return len(self.actions)

    def subset(self, idx) -> "PPOBatch":
        idx = torch.as_tensor(idx, dtype=torch.long)
        return PPOBatch(
            inputs={k: v[idx] for k, v in self.inputs.items()},
            states=RecurrentState(self.states.hidden[idx], self.states.cell[idx]),
            actions=self.actions[idx],
            old_log_probs=self.old_log_probs[idx],
            advantages=self.advantages[idx],
            returns=self.returns[idx],
        )


def build_batch(buffer: RolloutBuffer, cfg: TrainConfig) -> PPOBatch:
    if len(buffer) == 0:
        raise DomainError("cannot update from an empty buffer")
    advantages = np.zeros(len(buffer))
    returns = np.zeros(len(buffer))
    for start, stop in buffer.segments:
        seg = buffer.transitions[start:stop]
        adv, ret = compute_gae(
            [t.reward for t in seg], [t.value for t in seg], [t.done for t in seg], cfg.gamma, cfg.gae_lambda
        )
        advantages[start:stop] = adv
        returns[start:stop] = ret
    if cfg.normalize_advantages and len(advantages) > 1:
        advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)
    ts = buffer.transitions
    return PPOBatch(
        inputs=collate([t.observation for t in ts]),
        states=stack_states([t.state for t in ts]),
        actions=torch.as_tensor([t.action for t in ts], dtype=torch.long),
        old_log_probs=torch.as_tensor([t.log_prob for t in ts], dtype=DTYPE),
        advantages=torch.as_tensor(advantages, dtype=DTYPE),
        returns=torch.as_tensor(returns, dtype=DTYPE),
    )


def ppo_loss(net: PolicyNet, batch: PPOBatch, cfg: TrainConfig) -> Tuple[torch.Tensor, Dict[str, float]]:
    """
    Clipped surrogate plus value and entropy terms.

    ``loss = -E[min(r A, clip(r, 1-eps, 1+eps) A)] + c_v E[(V - R)^2] - c_e E[H]``
    """
    out = net(batch.inputs, batch.states)
    log_probs = out.log_probs.gather(1, batch.actions.unsqueeze(1)).squeeze(1)
    ratio = torch.exp(log_probs - batch.old_log_probs)
    surr1 = ratio * batch.advantages
    surr2 = torch.clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * batch.advantages
    policy_loss = -torch.min(surr1, surr2).mean()
    value_loss = ((out.value - batch.returns) ** 2).mean()
    entropy = masked_entropy(out, batch.inputs["mask"]).mean()
    loss = policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy
    diagnostics = {
        "policy_loss": float(policy_loss.detach()),
        "value_loss": float(value_loss.detach()),
        "entropy": float(entropy.detach()),
        "loss": float(loss.detach()),
        "ratio_max": float(ratio.detach().max()),
    }
    return loss, diagnostics


def make_optimizer(net: PolicyNet, cfg: TrainConfig) -> Tuple[Adam, StepLR]:
    """Adam with the learning rate decayed by ``lr_decay`` every ``lr_decay_every`` optimizer steps."""
    optimizer = Adam(net.parameters(), lr=cfg.lr)
    scheduler = StepLR(optimizer, step_size=cfg.lr_decay_every, gamma=cfg.lr_decay)
    return optimizer, scheduler


def ppo_update(
    net: PolicyNet,
    buffer: RolloutBuffer,
    cfg: TrainConfig,
    optimizer: Adam,
    scheduler: StepLR,
    rng: np.random.Generator,
) -> Dict[str, float]:
    """
    Runs ``cfg.ppo_epochs`` passes of shuffled minibatches over the buffer.

    Raises:
        TrainingDivergence: if a loss is not finite; ``diagnostics`` holds the
            offending terms and the optimizer step count
    """
    batch = build_batch(buffer, cfg)
    totals: Dict[str, float] = {}
    steps = 0
    net.train()
    for epoch in range(cfg.ppo_epochs):
        order = rng.permutation(len(batch))
        for lo in range(0, len(batch), cfg.batch_size):
            mb = batch.subset(order[lo: lo + cfg.batch_size])
            loss, diag = ppo_loss(net, mb, cfg)
            if not torch.isfinite(loss):
                diag.update(epoch=epoch, step=steps)
                raise TrainingDivergence(f"non-finite PPO loss at epoch {epoch}", diag)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            scheduler.step()
            steps += 1
            for k, v in diag.items():
                totals[k] = totals.get(k, 0.0) + v
    net.eval()
    summary = {k: v / max(steps, 1) for k, v in totals.items()}
    summary["optimizer_steps"] = steps
    summary["lr"] = optimizer.param_groups[0]["lr"]
    return summary


class Trainer:
    """Collect, update, log and checkpoint the shared policy."""

    def __init__(self, cfg: ExperimentConfig, net: Optional[PolicyNet] = None, seed: Optional[int] = None):
        self.cfg = cfg
        self.seed = cfg.seed if seed is None else seed
        torch.manual_seed(self.seed)
        self.net = net if net is not None else PolicyNet(cfg.policy)
        self.net.eval()
        self.optimizer, self.scheduler = make_optimizer(self.net, cfg.train)
        self.rng = np.random.default_rng(np.random.SeedSequence([self.seed, 7]))
        self.log: List[Dict[str, float]] = []

    def step(self, jobs: int = 1) -> Dict[str, float]:
        """One collect-then-update cycle."""
        buffer = collect_rollouts(self.net, self.cfg, self.cfg.train.episodes_per_update, self.rng, jobs=jobs)
        summary = ppo_update(self.net, buffer, self.cfg.train, self.optimizer, self.scheduler, self.rng)
        summary["mean_return"] = buffer.mean_return
        summary["mean_trace"] = float(np.mean(buffer.episode_traces))
        summary["transitions"] = len(buffer)
        summary["update"] = len(self.log) + 1
        self.log.append(summary)
        return summary

    def train(
        self,
        out_dir: Optional[Path] = None,
        jobs: int = 1,
        on_update: Optional[Callable[[Dict[str, float]], None]] = None,
    ) -> List[Dict[str, float]]:
        """
        Runs ``cfg.train.n_updates`` cycles.

        Writes the training log CSV after every update and a checkpoint every
        ``cfg.train.checkpoint_every`` updates plus one at the end.
        """
        tc = self.cfg.train
        for update in range(1, tc.n_updates + 1):
            summary = self.step(jobs)
            logger.info(
                f"Update {update}/{tc.n_updates}: return {summary['mean_return']:.4f}, "
                f"loss {summary.get('loss', math.nan):.4f}, lr {summary['lr']:.2e}"
            )
            if on_update is not None:
                on_update(summary)
            if out_dir is not None:
                out_dir.mkdir(parents=True, exist_ok=True)
                pd.DataFrame(self.log).to_csv(out_dir / self.cfg.output.training_log_csv, index=False)
                if update % tc.checkpoint_every == 0 or update == tc.n_updates:
                    save_checkpoint(out_dir / f"policy_{update:05d}.ckpt", self.net, self.cfg.policy, update)
                    save_checkpoint(out_dir / "policy_latest.ckpt", self.net, self.cfg.policy, update)
        return self.log

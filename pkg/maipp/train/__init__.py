"""PPO training of the shared policy and evaluation of the learned variants."""

from maipp.train.evaluate import evaluate_variant, run_trial
from maipp.train.ppo import Trainer, compute_gae, ppo_loss, ppo_update
from maipp.train.rollouts import RolloutBuffer, collect_rollouts

__all__ = [
    "RolloutBuffer",
    "Trainer",
    "collect_rollouts",
    "compute_gae",
    "evaluate_variant",
    "ppo_loss",
    "ppo_update",
    "run_trial",
]

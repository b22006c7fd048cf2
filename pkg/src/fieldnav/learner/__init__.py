from .gae import compute_gae
from .nets import MLP, Adam, clip_grads, global_norm, orthogonal
from .policy import PolicyParams
from .ppo import (NonFiniteLoss, RolloutBuffer, RolloutCollector,
                  collect_rollout, ppo_loss_and_grads, ppo_update, train,
                  write_metrics_csv)

__all__ = [
    "Adam", "MLP", "NonFiniteLoss", "PolicyParams", "RolloutBuffer",
    "RolloutCollector", "clip_grads", "collect_rollout", "compute_gae",
    "global_norm", "orthogonal", "ppo_loss_and_grads", "ppo_update", "train",
    "write_metrics_csv",
]

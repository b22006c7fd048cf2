"""PPO with a clipped surrogate objective, built directly on the numpy nets.

The trainer alternates fixed-size rollouts with multi-epoch minibatch
updates. All sampling (actions, episode seeds, minibatch shuffles) flows
from the run seed, so two runs with the same config produce identical
metrics, checkpoints, and rollouts.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from ..config import Config, TrainConfig, config_to_dict
from .gae import compute_gae
from .nets import Adam, clip_grads
from .policy import PolicyParams

log = logging.getLogger(__name__)


class NonFiniteLoss(RuntimeError):
    """Update aborted: the objective went non-finite."""


@dataclass
class RolloutBuffer:
    """Fixed-capacity on-policy transition store plus computed targets."""

    capacity: int
    obs_dim: int
    obs: np.ndarray = dc_field(init=False)
    actions_raw: np.ndarray = dc_field(init=False)
    log_probs: np.ndarray = dc_field(init=False)
    values: np.ndarray = dc_field(init=False)
    next_values: np.ndarray = dc_field(init=False)
    rewards: np.ndarray = dc_field(init=False)
    terminated: np.ndarray = dc_field(init=False)
    truncated: np.ndarray = dc_field(init=False)
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None
    size: int = 0

    def __post_init__(self) -> None:
        n = self.capacity
        self.obs = np.zeros((n, self.obs_dim))
        self.actions_raw = np.zeros(n)
        self.log_probs = np.zeros(n)
        self.values = np.zeros(n)
        self.next_values = np.zeros(n)
        self.rewards = np.zeros(n)
        self.terminated = np.zeros(n, dtype=bool)
        self.truncated = np.zeros(n, dtype=bool)

    def push(self, obs, u, logp, value, next_value, reward, terminated, truncated) -> None:
        i = self.size
        if i >= self.capacity:
            raise IndexError("rollout buffer full")
        self.obs[i] = obs
        self.actions_raw[i] = u
        self.log_probs[i] = logp
        self.values[i] = value
        self.next_values[i] = next_value
        self.rewards[i] = reward
        self.terminated[i] = terminated
        self.truncated[i] = truncated
        self.size += 1

    def finalize(self, gamma: float, lam: float) -> None:
        if self.size != self.capacity:
            raise ValueError("finalize called on a partial buffer")
        self.advantages, self.returns = compute_gae(
            self.rewards, self.values, self.next_values,
            self.terminated, self.truncated, gamma, lam,
        )


class RolloutCollector:
    """Steps one environment, carrying the episode across rollout boundaries."""

    def __init__(self, env, seed: int):
        self.env = env
        self._seed_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC011EC7]))
        self._action_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xAC7104]))
        self._obs = None
        self.episode_rewards: list[float] = []
        self.episode_lengths: list[int] = []
        self._ep_reward = 0.0
        self._ep_len = 0

    def _next_episode_seed(self) -> int:
        return int(self._seed_rng.integers(2**63))

    def collect(self, policy: PolicyParams, n_steps: int) -> RolloutBuffer:
        """Exactly n_steps transitions, resetting the env whenever needed."""
        buf = RolloutBuffer(capacity=n_steps, obs_dim=self.env.observation_size)
        self.episode_rewards = []
        self.episode_lengths = []
        if self._obs is None:
            self._obs = self.env.reset(self._next_episode_seed())
        while buf.size < n_steps:
            action, u, logp, value = policy.act(self._obs, self._action_rng)
            result = self.env.step(action)
            next_obs = result.observation
            next_value = policy.value(next_obs)
            reward = result.reward.total
            buf.push(self._obs, u, logp, value, next_value, reward,
                     result.terminated, result.truncated)
            self._ep_reward += reward
            self._ep_len += 1
            if result.terminated or result.truncated:
                self.episode_rewards.append(self._ep_reward)
                self.episode_lengths.append(self._ep_len)
                self._ep_reward = 0.0
                self._ep_len = 0
                self._obs = self.env.reset(self._next_episode_seed())
            else:
                self._obs = next_obs
        return buf


def collect_rollout(env, policy: PolicyParams, n_steps: int, seed: int = 0) -> RolloutBuffer:
    """One-shot collection helper (tests and demos)."""
    return RolloutCollector(env, seed).collect(policy, n_steps)


def ppo_loss_and_grads(
    policy: PolicyParams,
    obs: np.ndarray,
    actions_raw: np.ndarray,
    old_log_probs: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    clip_range: float,
    value_coef: float,
) -> tuple[float, dict, dict]:
    """Clipped-surrogate + value loss with exact gradients for one minibatch.

    Returns (total loss, grads keyed like PolicyParams.param_dict, metrics).
    """
    b = len(obs)
    logp, backward_logp = policy.log_prob_with_grads(obs, actions_raw)
    ratio = np.exp(logp - old_log_probs)
    clipped = np.clip(ratio, 1.0 - clip_range, 1.0 + clip_range)
    surr1 = ratio * advantages
    surr2 = clipped * advantages
    policy_loss = -float(np.mean(np.minimum(surr1, surr2)))

    # gradient of min(surr1, surr2) w.r.t. logp: the selected branch, with
    # the clipped branch flat outside the trust region
    take_s1 = surr1 <= surr2
    inside = (ratio > 1.0 - clip_range) & (ratio < 1.0 + clip_range)
    active = take_s1 | inside
    dlogp = -(ratio * advantages * active) / b
    grads = backward_logp(dlogp)
    grads = {f"actor_{k}" if k != "log_std" else k: v for k, v in grads.items()}

    values, vcache = policy.critic.forward(obs)
    verr = values - returns
    value_loss = float(np.mean(verr**2))
    dvalues = value_coef * 2.0 * verr / b
    for k, v in policy.critic.backward(vcache, dvalues).items():
        grads[f"critic_{k}"] = v

    total = policy_loss + value_coef * value_loss
    if not math.isfinite(total):
        raise NonFiniteLoss(
            f"policy_loss={policy_loss} value_loss={value_loss} "
            f"ratio range=({ratio.min()}, {ratio.max()})"
        )
    metrics = {
        "policy_loss": policy_loss,
        "value_loss": value_loss,
        "clip_fraction": float(np.mean(~inside)),
        "approx_kl": float(np.mean((ratio - 1.0) - np.log(np.maximum(ratio, 1e-12)))),
    }
    return total, grads, metrics


def ppo_update(
    policy: PolicyParams,
    buffer: RolloutBuffer,
    config: TrainConfig,
    optimizer: Adam,
    rng: np.random.Generator,
) -> dict:
    """Ten epochs of shuffled minibatches over one finalized rollout."""
    if buffer.advantages is None:
        buffer.finalize(config.gamma, config.gae_lambda)
    adv = buffer.advantages
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)

    n = buffer.capacity
    agg: dict[str, list[float]] = {
        "policy_loss": [], "value_loss": [], "clip_fraction": [], "approx_kl": []}
    for _ in range(config.n_epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            _, grads, metrics = ppo_loss_and_grads(
                policy,
                buffer.obs[idx],
                buffer.actions_raw[idx],
                buffer.log_probs[idx],
                adv[idx],
                buffer.returns[idx],
                config.clip_range,
                config.value_coef,
            )
            # clip per network: early value-error gradients are orders of
            # magnitude larger than policy gradients and would otherwise set
            # the scale for both
            actor_grads = {k: g for k, g in grads.items()
                           if not k.startswith("critic_")}
            critic_grads = {k: g for k, g in grads.items()
                            if k.startswith("critic_")}
            clip_grads(actor_grads, config.max_grad_norm)
            clip_grads(critic_grads, config.max_grad_norm)
            params = policy.param_dict()
            optimizer.step(params, grads)
            policy.apply_param_dict(params)
            policy.clamp_log_std()
            for k in agg:
                agg[k].append(metrics[k])
    out = {k: float(np.mean(v)) for k, v in agg.items()}
    out["entropy"] = policy.entropy()
    out["log_std"] = policy.log_std
    return out


def train(config: Config, env, run_dir: str | Path | None = None,
          progress: bool = False) -> tuple[PolicyParams, list[dict]]:
    """Full training run: alternate collect/update until total_steps.

    Writes metrics.csv and periodic checkpoints under run_dir when given.
    Returns the trained policy and the per-update metrics rows.
    """
    tc = config.train
    policy = PolicyParams(env.observation_size, hidden=tc.hidden,
                          log_std_init=tc.log_std_init, seed=tc.seed)
    optimizer = Adam(lr=tc.learning_rate)
    update_rng = np.random.default_rng(np.random.SeedSequence([tc.seed, 0x0BDA7E]))
    collector = RolloutCollector(env, seed=tc.seed)

    run_path = Path(run_dir) if run_dir is not None else None
    if run_path is not None:
        run_path.mkdir(parents=True, exist_ok=True)
        (run_path / "config.json").write_text(
            json.dumps(config_to_dict(config), indent=2) + "\n", encoding="utf-8")

    rows: list[dict] = []
    n_updates = max(1, tc.total_steps // tc.n_steps)
    steps_done = 0
    for update in range(1, n_updates + 1):
        buf = collector.collect(policy, tc.n_steps)
        buf.finalize(tc.gamma, tc.gae_lambda)
        metrics = ppo_update(policy, buf, tc, optimizer, update_rng)
        steps_done += tc.n_steps
        row = {
            "update": update,
            "steps": steps_done,
            "mean_ep_reward": (float(np.mean(collector.episode_rewards))
                               if collector.episode_rewards else math.nan),
            "mean_ep_len": (float(np.mean(collector.episode_lengths))
                            if collector.episode_lengths else math.nan),
            "episodes": len(collector.episode_rewards),
            **metrics,
        }
        rows.append(row)
        if progress:
            log.info("update %d/%d steps=%d ep_reward=%.1f ep_len=%.1f",
                     update, n_updates, steps_done, row["mean_ep_reward"],
                     row["mean_ep_len"])
        if run_path is not None and (update % tc.checkpoint_every == 0 or update == n_updates):
            policy.save(run_path / f"checkpoint_{update:05d}.npz",
                        config_json=json.dumps(config_to_dict(config)))
    if run_path is not None:
        policy.save(run_path / "checkpoint_final.npz",
                    config_json=json.dumps(config_to_dict(config)))
        write_metrics_csv(run_path / "metrics.csv", rows)
    return policy, rows


def write_metrics_csv(path: str | Path, rows: list[dict]) -> None:
    if not rows:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)

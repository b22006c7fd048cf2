"""Squashed-Gaussian actor and value critic for the single steering action.

The actor MLP outputs the pre-squash mean; a state-independent log-std
parameterizes the Gaussian; samples pass through tanh to land in [-1, 1],
with the log-density corrected by the tanh Jacobian. Raw (pre-squash)
samples are what the rollout buffer stores, so re-evaluating log-probs under
updated parameters is exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .nets import MLP

LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_JACOBIAN_EPS = 1e-6

CHECKPOINT_SCHEMA = 1


class PolicyParams:
    """Actor + critic weights and the action log-std."""

    def __init__(self, obs_dim: int, hidden: int = 64, log_std_init: float = -0.5,
                 seed: int = 0):
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
        self.obs_dim = obs_dim
        self.hidden = hidden
        self.actor = MLP(obs_dim, hidden, rng, head_gain=0.01)
        self.critic = MLP(obs_dim, hidden, rng, head_gain=1.0)
        self.log_std = float(np.clip(log_std_init, LOG_STD_MIN, LOG_STD_MAX))

    # -- sampling -------------------------------------------------------------

    def act(self, obs: np.ndarray, rng: np.random.Generator | None = None,
            deterministic: bool = False) -> tuple[float, float, float, float]:
        """One action for one observation: (action, raw_u, log_prob, value)."""
        obs2 = obs[None, :]
        mu, _ = self.actor.forward(obs2)
        value, _ = self.critic.forward(obs2)
        if deterministic:
            u = float(mu[0])
        else:
            u = float(mu[0] + math.exp(self.log_std) * rng.standard_normal())
        logp = float(self.log_prob(obs2, np.array([u]))[0])
        return float(np.tanh(u)), u, logp, float(value[0])

    def value(self, obs: np.ndarray) -> float:
        v, _ = self.critic.forward(obs[None, :])
        return float(v[0])

    def values(self, obs: np.ndarray) -> np.ndarray:
        v, _ = self.critic.forward(obs)
        return v

    # -- densities ------------------------------------------------------------

    def log_prob(self, obs: np.ndarray, u: np.ndarray) -> np.ndarray:
        """log pi(a | obs) for the squashed action a = tanh(u).

        Includes the tanh change-of-variables term, so exp(log_prob)
        integrates to one over the squashed action in (-1, 1).
        """
        mu, _ = self.actor.forward(obs)
        std = math.exp(self.log_std)
        z = (u - mu) / std
        gauss = -0.5 * z * z - self.log_std - _LOG_SQRT_2PI
        corr = np.log(1.0 - np.tanh(u) ** 2 + _JACOBIAN_EPS)
        return gauss - corr

    def log_prob_with_grads(self, obs: np.ndarray, u: np.ndarray):
        """Forward pass returning (logp, backward), where backward(dlogp)
        yields gradients of sum(dlogp * logp) over actor params and log_std."""
        mu, cache = self.actor.forward(obs)
        std = math.exp(self.log_std)
        z = (u - mu) / std
        logp = -0.5 * z * z - self.log_std - _LOG_SQRT_2PI \
            - np.log(1.0 - np.tanh(u) ** 2 + _JACOBIAN_EPS)

        def backward(dlogp: np.ndarray) -> dict:
            dmu = dlogp * z / std
            grads = self.actor.backward(cache, dmu)
            grads["log_std"] = np.array(float(np.sum(dlogp * (z * z - 1.0))))
            return grads

        return logp, backward

    def entropy(self) -> float:
        """Gaussian (pre-squash) entropy, reported as a diagnostic."""
        return 0.5 * (1.0 + math.log(2.0 * math.pi)) + self.log_std

    # -- parameter plumbing ----------------------------------------------------

    def param_dict(self) -> dict[str, np.ndarray]:
        d = {f"actor_{k}": v for k, v in self.actor.params.items()}
        d.update({f"critic_{k}": v for k, v in self.critic.params.items()})
        d["log_std"] = np.array(self.log_std)
        return d

    def apply_param_dict(self, d: dict[str, np.ndarray]) -> None:
        for k, v in d.items():
            if k == "log_std":
                self.log_std = float(v)
            elif k.startswith("actor_"):
                self.actor.params[k[6:]] = np.array(v, dtype=float)
            elif k.startswith("critic_"):
                self.critic.params[k[7:]] = np.array(v, dtype=float)
            else:
                raise KeyError(k)

    def clamp_log_std(self) -> None:
        self.log_std = float(np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX))

    def flat_params(self) -> np.ndarray:
        d = self.param_dict()
        return np.concatenate([d[k].ravel() for k in sorted(d)])

    def set_flat_params(self, flat: np.ndarray) -> None:
        d = self.param_dict()
        off = 0
        out = {}
        for k in sorted(d):
            n = d[k].size
            out[k] = flat[off:off + n].reshape(d[k].shape)
            off += n
        self.apply_param_dict(out)

    # -- persistence -----------------------------------------------------------

    def save(self, path: str | Path, config_json: str = "{}") -> None:
        arrays = {k: np.asarray(v) for k, v in self.param_dict().items()}
        np.savez(
            path,
            schema=np.array(CHECKPOINT_SCHEMA),
            obs_dim=np.array(self.obs_dim),
            hidden=np.array(self.hidden),
            config_json=np.array(config_json),
            **arrays,
        )

    @classmethod
    def load(cls, path: str | Path) -> tuple["PolicyParams", dict]:
        data = np.load(path, allow_pickle=False)
        if int(data["schema"]) != CHECKPOINT_SCHEMA:
            raise ValueError(f"unsupported checkpoint schema {int(data['schema'])}")
        policy = cls(obs_dim=int(data["obs_dim"]), hidden=int(data["hidden"]))
        policy.apply_param_dict(
            {k: data[k] for k in data.files
             if k.startswith(("actor_", "critic_")) or k == "log_std"}
        )
        cfg = json.loads(str(data["config_json"]))
        return policy, cfg

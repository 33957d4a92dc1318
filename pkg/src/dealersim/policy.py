"""Policy heads over the shared MLPs.

LP: a diagonal Gaussian on three raw outputs with a state-independent
learned log-std, squashed into action bounds (tanh for the two tweaks,
affine tanh for the hedge fraction).  Log-probabilities carry the
change-of-variables correction.  LT: a categorical over (buy, sell, hold).

PPO works with the raw (pre-squash) Gaussian sample; since the squash
correction depends only on that stored raw action, it cancels in the
probability ratio but is still included so logged values are true densities.
"""

from __future__ import annotations

import numpy as np

from .nets import Mlp

LOG_2PI = float(np.log(2.0 * np.pi))


def gaussian_log_prob(u: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Diagonal Gaussian log density, batched over rows."""
    u = np.atleast_2d(u)
    mean = np.atleast_2d(mean)
    z = (u - mean) / np.exp(log_std)
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(log_std) - 0.5 * u.shape[-1] * LOG_2PI


def tanh_log_deriv(u: np.ndarray) -> np.ndarray:
    """log d tanh(u)/du = log(1 - tanh(u)^2), computed without cancellation."""
    return 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


def squash_lp(u: np.ndarray) -> np.ndarray:
    """Map raw outputs to (eps_sym, eps_asym, hedge_fraction) bounds."""
    u = np.asarray(u, dtype=float)
    out = np.tanh(u)
    if u.ndim == 1:
        out[2] = 0.5 * (out[2] + 1.0)
    else:
        out[:, 2] = 0.5 * (out[:, 2] + 1.0)
    return out


def squash_correction(u: np.ndarray) -> np.ndarray:
    """Sum over dims of log |d squash / du|; subtracted from the raw density."""
    u = np.atleast_2d(u)
    corr = tanh_log_deriv(u).sum(axis=-1)
    return corr - np.log(2.0)  # the hedge dim is tanh scaled by 1/2


class GaussianPolicy:
    """LP head: mean from the MLP, shared learned log-std."""

    def __init__(
        self,
        obs_dim: int,
        rng: np.random.Generator,
        hidden=(64, 64),
        action_dim: int = 3,
        init_log_std: float = -0.5,
    ):
        self.net = Mlp([obs_dim, *hidden, action_dim], rng, out_scale=0.01)
        self.log_std = np.full(action_dim, float(init_log_std))
        self.action_dim = action_dim

    def act(self, obs: np.ndarray, rng: np.random.Generator):
        """Returns (raw_u, env_action, log_prob, aux) for one observation."""
        mean = self.net(obs[None])[0]
        u = mean + np.exp(self.log_std) * rng.standard_normal(self.action_dim)
        logp = float(self.log_prob(u[None], mean[None])[0])
        return u, squash_lp(u), logp

    def mean_action(self, obs: np.ndarray):
        """Squashed distribution mode, for exploration-free evaluation."""
        mean = self.net(obs[None])[0]
        return squash_lp(mean)

    def log_prob(self, u: np.ndarray, mean: np.ndarray) -> np.ndarray:
        return gaussian_log_prob(u, mean, self.log_std) - squash_correction(u)

    def entropy(self) -> float:
        """Pre-squash Gaussian entropy; state-independent by construction."""
        return float(np.sum(self.log_std) + 0.5 * self.action_dim * (1.0 + LOG_2PI))

    def to_dict(self) -> dict:
        return {"net": self.net.to_dict(), "log_std": self.log_std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianPolicy":
        net = Mlp.from_dict(d["net"])
        policy = cls.__new__(cls)
        policy.net = net
        policy.log_std = np.array(d["log_std"], dtype=float)
        policy.action_dim = policy.log_std.shape[0]
        return policy


def log_softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.atleast_2d(logits)
    m = logits.max(axis=-1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


class CategoricalPolicy:
    """LT head: categorical over (buy, sell, hold)."""

    def __init__(self, obs_dim: int, rng: np.random.Generator, hidden=(64, 64), n_actions: int = 3):
        self.net = Mlp([obs_dim, *hidden, n_actions], rng, out_scale=0.01)
        self.n_actions = n_actions

    def act(self, obs: np.ndarray, rng: np.random.Generator):
        logits = self.net(obs[None])[0]
        p = softmax(logits)[0]
        a = int(rng.choice(self.n_actions, p=p))
        return a, a, float(np.log(p[a]))

    def log_prob(self, actions: np.ndarray, logits: np.ndarray) -> np.ndarray:
        ls = log_softmax(logits)
        return ls[np.arange(ls.shape[0]), np.asarray(actions, dtype=int)]

    def to_dict(self) -> dict:
        return {"net": self.net.to_dict(), "n_actions": self.n_actions}

    @classmethod
    def from_dict(cls, d: dict) -> "CategoricalPolicy":
        policy = cls.__new__(cls)
        policy.net = Mlp.from_dict(d["net"])
        policy.n_actions = int(d["n_actions"])
        return policy


class ScriptedZeroTweakLP:
    """Fixed dealer quoting exactly the reference prices and never hedging."""

    trainable = False

    def act(self, obs: np.ndarray, rng: np.random.Generator):
        return np.zeros(3), np.zeros(3), 0.0

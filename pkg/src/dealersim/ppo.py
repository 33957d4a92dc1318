"""PPO on the numpy stack: GAE, clipped surrogate, simultaneous two-family training.

One shared policy per family acts for every agent of that family; each
agent-episode contributes its own trajectory to the family batch.  Updates
are plain SGD with a global gradient-norm clip and a NaN guard that rolls
the update back rather than poisoning the parameters.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .agents import LP_FAMILY, LT_FAMILY, lp_observation_dim, lt_observation_dim
from .nets import Mlp, RunningNorm, clip_grads
from .policy import CategoricalPolicy, GaussianPolicy, log_softmax, softmax


@dataclass(frozen=True)
class TrainerConfig:
    discount: float = 0.99
    gae_lambda: float = 0.95
    clip_ratio: float = 0.2
    epochs: int = 4
    minibatch_size: int = 256
    learning_rate: float = 0.03
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    episodes_per_iter: int = 8
    max_grad_norm: float = 0.5
    hidden: tuple = (64, 64)
    init_log_std: float = -0.5

    def __post_init__(self):
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must be in [0,1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must be in [0,1]")
        if self.clip_ratio <= 0.0:
            raise ValueError("clip_ratio must be > 0")


def gae(rewards, values, dones, discount: float, lam: float):
    """Generalized advantage estimation with resets at done flags.

    The value after the final transition (or any done) is taken as zero, so
    callers should pass whole episodes.  Returns (advantages, returns).
    """
    r = np.asarray(rewards, dtype=float)
    v = np.asarray(values, dtype=float)
    d = np.asarray(dones, dtype=bool)
    if not (r.shape == v.shape == d.shape) or r.ndim != 1:
        raise ValueError("rewards, values, dones must be aligned 1-D arrays")
    n = r.shape[0]
    adv = np.zeros(n)
    next_adv = 0.0
    next_value = 0.0
    for t in range(n - 1, -1, -1):
        if d[t]:
            next_adv = 0.0
            next_value = 0.0
        delta = r[t] + discount * next_value - v[t]
        adv[t] = delta + discount * lam * next_adv
        next_adv = adv[t]
        next_value = v[t]
    return adv, adv + v


def _surrogate_and_grad(logp_new, logp_old, adv, clip_ratio):
    """Clipped objective per sample and d(objective)/d(logp_new)."""
    ratio = np.exp(logp_new - logp_old)
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio) * adv
    obj = np.minimum(unclipped, clipped)
    # Gradient flows only where the unclipped branch is the active minimum.
    grad = np.where(unclipped <= clipped, ratio * adv, 0.0)
    clip_frac = float(np.mean(np.abs(ratio - 1.0) > clip_ratio))
    return obj, grad, clip_frac


def _snapshot(policy, value_net):
    state = {
        "policy": [w.copy() for w in policy.net.weights]
        + [b.copy() for b in policy.net.biases],
        "value": [w.copy() for w in value_net.weights]
        + [b.copy() for b in value_net.biases],
    }
    if isinstance(policy, GaussianPolicy):
        state["log_std"] = policy.log_std.copy()
    return state


def _restore(policy, value_net, state):
    n = len(policy.net.weights)
    policy.net.weights = [w.copy() for w in state["policy"][:n]]
    policy.net.biases = [b.copy() for b in state["policy"][n:]]
    m = len(value_net.weights)
    value_net.weights = [w.copy() for w in state["value"][:m]]
    value_net.biases = [b.copy() for b in state["value"][m:]]
    if "log_std" in state:
        policy.log_std = state["log_std"].copy()


def _grads_finite(grads, extra=None) -> bool:
    for dw, db in grads:
        if not (np.all(np.isfinite(dw)) and np.all(np.isfinite(db))):
            return False
    return extra is None or bool(np.all(np.isfinite(extra)))


def ppo_update(policy, value_net: Mlp, batch: dict, config: TrainerConfig, rng) -> dict:
    """One PPO update over the batch; returns loss/diagnostic stats.

    batch keys: obs (N,d), actions (raw Gaussian draws or int choices),
    logp (N), advantages (N), returns (N).
    """
    obs = np.asarray(batch["obs"], dtype=float)
    actions = np.asarray(batch["actions"])
    logp_old = np.asarray(batch["logp"], dtype=float)
    adv = np.asarray(batch["advantages"], dtype=float)
    rets = np.asarray(batch["returns"], dtype=float)
    n = obs.shape[0]
    if n < 1:
        raise ValueError("empty batch")

    adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    gaussian = isinstance(policy, GaussianPolicy)
    snapshot = _snapshot(policy, value_net)
    stats = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "clip_fraction": 0.0}
    n_steps = 0

    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.minibatch_size):
            idx = order[start : start + config.minibatch_size]
            b = idx.shape[0]
            mb_obs, mb_act = obs[idx], actions[idx]
            mb_logp_old, mb_adv, mb_ret = logp_old[idx], adv[idx], rets[idx]

            out, cache = policy.net.forward(mb_obs)
            if gaussian:
                logp_new = policy.log_prob(mb_act, out)
                obj, dobj_dlogp, clip_frac = _surrogate_and_grad(
                    logp_new, mb_logp_old, mb_adv, config.clip_ratio
                )
                dl_dlogp = -dobj_dlogp / b  # loss = -mean(obj) - ent_coef * H
                var = np.exp(2.0 * policy.log_std)
                zerr = (mb_act - out) / var
                grad_out = dl_dlogp[:, None] * zerr
                z2 = ((mb_act - out) ** 2) / var
                grad_log_std = (dl_dlogp[:, None] * (z2 - 1.0)).sum(axis=0)
                grad_log_std -= config.entropy_coef  # dH/dlog_std = 1
                entropy = policy.entropy()
            else:
                logp_new = policy.log_prob(mb_act, out)
                obj, dobj_dlogp, clip_frac = _surrogate_and_grad(
                    logp_new, mb_logp_old, mb_adv, config.clip_ratio
                )
                dl_dlogp = -dobj_dlogp / b
                p = softmax(out)
                onehot = np.zeros_like(p)
                onehot[np.arange(b), mb_act.astype(int)] = 1.0
                grad_out = dl_dlogp[:, None] * (onehot - p)
                ls = log_softmax(out)
                ent_per = -np.sum(p * ls, axis=-1)
                entropy = float(ent_per.mean())
                # d entropy / d logit_j = -p_j (log p_j + H)
                dent = -p * (ls + ent_per[:, None])
                grad_out += -(config.entropy_coef / b) * dent
                grad_log_std = None

            grads, _ = policy.net.backward(cache, grad_out)
            v_out, v_cache = value_net.forward(mb_obs)
            v_err = v_out[:, 0] - mb_ret
            value_loss = 0.5 * float(np.mean(v_err**2))
            v_grads, _ = value_net.backward(
                v_cache, (config.value_coef * v_err / b)[:, None]
            )

            if not (_grads_finite(grads, grad_log_std) and _grads_finite(v_grads)):
                _restore(policy, value_net, snapshot)
                return {
                    "aborted": True,
                    "reason": "non-finite gradient",
                    "n_samples": int(n),
                    "updates_applied": n_steps,
                }

            clip_grads(grads, config.max_grad_norm, extra=grad_log_std)
            clip_grads(v_grads, config.max_grad_norm)
            policy.net.apply_grads(grads, config.learning_rate)
            if gaussian:
                policy.log_std -= config.learning_rate * grad_log_std
            value_net.apply_grads(v_grads, config.learning_rate)

            stats["policy_loss"] += float(-np.mean(obj))
            stats["value_loss"] += value_loss
            stats["entropy"] += float(entropy)
            stats["clip_fraction"] += clip_frac
            n_steps += 1

    for k in stats:
        stats[k] /= max(n_steps, 1)
    stats["aborted"] = False
    stats["n_samples"] = int(n)
    return stats


class PolicyBundle:
    """Policy, value net and observation normalizer for one family."""

    def __init__(self, family: str, policy, value_net: Mlp, normalizer: RunningNorm,
                 config: TrainerConfig):
        self.family = family
        self.policy = policy
        self.value_net = value_net
        self.normalizer = normalizer
        self.config = config
        self.iteration = 0
        self.trainable = True

    def act(self, obs: np.ndarray, rng: np.random.Generator, update_norm: bool = False,
            deterministic: bool = False):
        """Returns (norm_obs, raw_action, env_action, log_prob, value).

        deterministic swaps the sampled action for the distribution mode when
        the policy supports one; log_prob still describes the sampled draw and
        is only meaningful for training, which never sets the flag.
        """
        if update_norm:
            self.normalizer.update(obs[None])
        norm_obs = self.normalizer.normalize(obs)
        raw, env_action, logp = self.policy.act(norm_obs, rng)
        if deterministic and hasattr(self.policy, "mean_action"):
            env_action = self.policy.mean_action(norm_obs)
        value = float(self.value_net(norm_obs[None])[0, 0])
        return norm_obs, raw, env_action, logp, value

    def to_dict(self) -> dict:
        log_std = (
            self.policy.log_std.tolist()
            if isinstance(self.policy, GaussianPolicy)
            else None
        )
        return {
            "family": self.family,
            "layer_sizes": self.policy.net.layer_sizes,
            "policy_net": self.policy.net.to_dict(),
            "log_std": log_std,
            "value_net": self.value_net.to_dict(),
            "normalizer": self.normalizer.to_dict(),
            "trainer_config": asdict(self.config),
            "iteration": self.iteration,
            "rng_state": None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyBundle":
        cfg_dict = dict(d["trainer_config"])
        cfg_dict["hidden"] = tuple(cfg_dict["hidden"])
        config = TrainerConfig(**cfg_dict)
        if d["log_std"] is not None:
            policy = GaussianPolicy.from_dict(
                {"net": d["policy_net"], "log_std": d["log_std"]}
            )
        else:
            policy = CategoricalPolicy.from_dict(
                {"net": d["policy_net"], "n_actions": d["layer_sizes"][-1]}
            )
        bundle = cls(
            d["family"],
            policy,
            Mlp.from_dict(d["value_net"]),
            RunningNorm.from_dict(d["normalizer"]),
            config,
        )
        bundle.iteration = int(d["iteration"])
        return bundle

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls, path) -> "PolicyBundle":
        with open(path) as f:
            return cls.from_dict(json.load(f))


class ScriptedBundle:
    """Adapter giving scripted actors the PolicyBundle act interface."""

    trainable = False

    def __init__(self, actor, family: str):
        self.policy = actor
        self.family = family

    def act(self, obs, rng, update_norm: bool = False, deterministic: bool = False):
        raw, env_action, logp = self.policy.act(obs, rng)
        return obs, raw, env_action, logp, 0.0


def make_lp_bundle(env_config, config: TrainerConfig, rng) -> PolicyBundle:
    dim = lp_observation_dim(env_config.n_levels)
    policy = GaussianPolicy(dim, rng, hidden=config.hidden, init_log_std=config.init_log_std)
    value_net = Mlp([dim, *config.hidden, 1], rng)
    return PolicyBundle(LP_FAMILY, policy, value_net, RunningNorm(dim), config)


def make_lt_bundle(env_config, config: TrainerConfig, rng) -> PolicyBundle:
    dim = lt_observation_dim(env_config.n_lp)
    policy = CategoricalPolicy(dim, rng, hidden=config.hidden)
    value_net = Mlp([dim, *config.hidden, 1], rng)
    return PolicyBundle(LT_FAMILY, policy, value_net, RunningNorm(dim), config)


def run_episode(env, lp_bundle, lt_bundle, rng, update_norm: bool = False, recorder=None,
                deterministic_lp: bool = False):
    """Play one episode; returns per-agent trajectories and reward totals.

    Trajectories are dicts of lists keyed by family, one entry per agent,
    suitable for GAE + batching.  recorder(env, step, lp_env_actions,
    rewards, info) is called after every step when provided.
    deterministic_lp makes dealers quote their policy mode, which reads out
    learned behavior without exploration noise; takers keep sampling since
    their policy is itself a trade-frequency distribution.
    """
    lp_obs, lt_obs = env.reset()
    n_lp, n_lt = env.n_lp, env.n_lt
    lp_trajs = [
        {"obs": [], "actions": [], "logp": [], "rewards": [], "values": [], "dones": []}
        for _ in range(n_lp)
    ]
    lt_trajs = [
        {"obs": [], "actions": [], "logp": [], "rewards": [], "values": [], "dones": []}
        for _ in range(n_lt)
    ]
    done = False
    while not done:
        lp_env_actions = []
        for j in range(n_lp):
            norm_obs, raw, env_action, logp, value = lp_bundle.act(
                lp_obs[j], rng, update_norm=update_norm, deterministic=deterministic_lp
            )
            lp_env_actions.append(env_action)
            traj = lp_trajs[j]
            traj["obs"].append(norm_obs)
            traj["actions"].append(raw)
            traj["logp"].append(logp)
            traj["values"].append(value)
        lt_env_actions = []
        for i in range(n_lt):
            norm_obs, raw, env_action, logp, value = lt_bundle.act(
                lt_obs[i], rng, update_norm=update_norm
            )
            lt_env_actions.append(env_action)
            traj = lt_trajs[i]
            traj["obs"].append(norm_obs)
            traj["actions"].append(raw)
            traj["logp"].append(logp)
            traj["values"].append(value)

        (lp_obs, lt_obs), (lp_rewards, lt_rewards), done, info = env.step(
            lp_env_actions, lt_env_actions
        )
        for j in range(n_lp):
            lp_trajs[j]["rewards"].append(float(lp_rewards[j]))
            lp_trajs[j]["dones"].append(done)
        for i in range(n_lt):
            lt_trajs[i]["rewards"].append(float(lt_rewards[i]))
            lt_trajs[i]["dones"].append(done)
        if recorder is not None:
            recorder(env, env.t, lp_env_actions, (lp_rewards, lt_rewards), info)
    return lp_trajs, lt_trajs


def _batch_from_trajs(trajs, config: TrainerConfig):
    """GAE per trajectory, then one flat family batch."""
    batch = {"obs": [], "actions": [], "logp": [], "advantages": [], "returns": []}
    episode_rewards = []
    for traj in trajs:
        if not traj["rewards"]:
            continue
        adv, rets = gae(
            traj["rewards"], traj["values"], traj["dones"],
            config.discount, config.gae_lambda,
        )
        batch["obs"].extend(traj["obs"])
        batch["actions"].extend(traj["actions"])
        batch["logp"].extend(traj["logp"])
        batch["advantages"].extend(adv.tolist())
        batch["returns"].extend(rets.tolist())
        episode_rewards.append(float(np.sum(traj["rewards"])))
    out = {
        "obs": np.asarray(batch["obs"], dtype=float),
        "actions": np.asarray(batch["actions"]),
        "logp": np.asarray(batch["logp"], dtype=float),
        "advantages": np.asarray(batch["advantages"], dtype=float),
        "returns": np.asarray(batch["returns"], dtype=float),
    }
    return out, episode_rewards


def train(
    env_factory,
    lp_config: TrainerConfig,
    lt_config: TrainerConfig,
    total_steps: int,
    seed: int,
    scripted_lp=None,
    n_envs: int = 1,
    lp_bundle=None,
    lt_bundle=None,
):
    """Simultaneous two-family training loop.

    env_factory(instance) must return a fresh DealerMarketEnv.  scripted_lp,
    when given, replaces the LP family with a fixed actor (no LP training).
    Passing existing bundles resumes them; iteration numbering continues.
    Returns (lp_bundle, lt_bundle, curves) where curves is a list of
    per-iteration stat dicts.
    """
    init_rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    act_rng = np.random.default_rng(np.random.SeedSequence((seed, 1)))
    update_rng = np.random.default_rng(np.random.SeedSequence((seed, 2)))

    envs = [env_factory(i) for i in range(n_envs)]
    env_cfg = envs[0].config
    if scripted_lp is not None:
        lp_bundle = ScriptedBundle(scripted_lp, LP_FAMILY)
    elif lp_bundle is None:
        lp_bundle = make_lp_bundle(env_cfg, lp_config, init_rng)
    if lt_bundle is None:
        lt_bundle = make_lt_bundle(env_cfg, lt_config, init_rng)

    curves = []
    steps_done = 0
    iteration = max(getattr(lp_bundle, "iteration", 0), getattr(lt_bundle, "iteration", 0))
    while steps_done < total_steps:
        iteration += 1
        lp_all, lt_all = [], []
        for e in range(lp_config.episodes_per_iter):
            env = envs[e % n_envs]
            lp_trajs, lt_trajs = run_episode(
                env, lp_bundle, lt_bundle, act_rng, update_norm=True
            )
            lp_all.extend(lp_trajs)
            lt_all.extend(lt_trajs)
            steps_done += env.config.episode_len

        row = {"iteration": iteration, "steps": steps_done}
        if lp_bundle.trainable and lp_all:
            lp_batch, lp_ep_rewards = _batch_from_trajs(lp_all, lp_config)
            lp_stats = ppo_update(
                lp_bundle.policy, lp_bundle.value_net, lp_batch, lp_config, update_rng
            )
            lp_bundle.iteration = iteration
            row["lp_mean_episode_reward"] = float(np.mean(lp_ep_rewards))
            row.update({f"lp_{k}": v for k, v in lp_stats.items()})
        if lt_all:
            lt_batch, lt_ep_rewards = _batch_from_trajs(lt_all, lt_config)
            lt_stats = ppo_update(
                lt_bundle.policy, lt_bundle.value_net, lt_batch, lt_config, update_rng
            )
            lt_bundle.iteration = iteration
            row["lt_mean_episode_reward"] = float(np.mean(lt_ep_rewards))
            row.update({f"lt_{k}": v for k, v in lt_stats.items()})
        curves.append(row)
    return lp_bundle, lt_bundle, curves

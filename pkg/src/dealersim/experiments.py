"""Experiment harness: train per sweep point, evaluate frozen policies,
stream metric rows to CSV, and distill per-point summaries.

Sweep points that share a training environment (a shared policy trained
across the whole type spectrum, then sliced at evaluation) are trained once
per seed and reused for every point in the group.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .agents import LP_FAMILY, LT_FAMILY, LT_ACTION_NAMES, TypeDistribution
from .ecnmodel import EcnModel, build_default_model
from .env import (
    FLOW_KIND,
    PNL_KIND,
    DealerMarketEnv,
    EnvConfig,
    TrendConfig,
)
from .marketcore import ECN_ID
from .policy import ScriptedZeroTweakLP
from .ppo import TrainerConfig, run_episode, train

DEFAULT_MODEL_SEED = 777
LP_KIND = "LP"

# Evaluation environments draw episode streams disjoint from training ones.
_EVAL_INSTANCE_BASE = 10_000

ROWS_COLUMNS = [
    "experiment",
    "sweep_key",
    "seed",
    "episode",
    "step",
    "agent_id",
    "family",
    "kind",
    "w",
    "gamma",
    "m_star",
    "q_buy",
    "q_sell",
    "eps_sym",
    "eps_asym",
    "eps",
    "hedge_fraction",
    "lt_choice",
    "reward",
    "d_spread_pnl",
    "d_inventory_pnl",
    "inventory",
    "counterparty",
]

_INT_COLUMNS = frozenset({"seed", "episode", "step", "agent_id", "counterparty"})
_FLOAT_COLUMNS = frozenset(
    {
        "w",
        "gamma",
        "m_star",
        "q_buy",
        "q_sell",
        "eps_sym",
        "eps_asym",
        "eps",
        "hedge_fraction",
        "reward",
        "d_spread_pnl",
        "d_inventory_pnl",
        "inventory",
    }
)


@dataclass(frozen=True)
class SweepPoint:
    """One evaluated configuration.  train_env may be shared across points."""

    key: str
    train_env: EnvConfig
    eval_env: EnvConfig
    scripted_lp: bool = False


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    points: tuple
    seeds: tuple
    lp_trainer: TrainerConfig = TrainerConfig()
    lt_trainer: TrainerConfig = TrainerConfig()
    total_steps: int = 50_000
    eval_episodes: int = 20
    out_dir: str = "runs/experiment"
    n_envs: int = 1
    model_path: str | None = None

    def __post_init__(self):
        if len(self.points) < 1:
            raise ValueError("spec needs at least one sweep point")
        if len(self.seeds) < 1:
            raise ValueError("spec needs at least one seed")
        if self.total_steps < 0 or self.eval_episodes < 1:
            raise ValueError("budgets must be positive")
        keys = [p.key for p in self.points]
        if len(set(keys)) != len(keys):
            raise ValueError(f"duplicate sweep keys: {keys}")


# -- CSV plumbing ---------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_rows_csv(rows, path) -> None:
    """MetricRow dicts -> CSV with the pinned column order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ROWS_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in ROWS_COLUMNS])


def _parse_cell(col: str, text: str):
    if text == "":
        return None
    if col in _INT_COLUMNS:
        return int(text)
    if col in _FLOAT_COLUMNS:
        return float(text)
    return text


def read_rows_csv(path) -> list:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ROWS_COLUMNS:
            raise ValueError(f"unexpected rows.csv header: {header}")
        return [
            {c: _parse_cell(c, cell) for c, cell in zip(ROWS_COLUMNS, line)}
            for line in reader
        ]


def export_csv(records, path, fieldnames=None) -> None:
    """Any list of flat dicts -> CSV; row order is preserved as given."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fieldnames is None:
        seen = {}
        for rec in records:
            for k in rec:
                seen.setdefault(k, None)
        fieldnames = list(seen)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=fieldnames, lineterminator="\n", restval=""
        )
        writer.writeheader()
        for rec in records:
            writer.writerow({k: _fmt(v) for k, v in rec.items() if k in fieldnames})


# -- evaluation -----------------------------------------------------------------


def _lp_row(experiment, key, seed, episode, env, j, env_action, reward):
    t = env.lp_types[j]
    _, d_inv, d_spread = env.ledgers[j].last_step_deltas
    eps_sym = float(env_action[0])
    eps_asym = float(env_action[1])
    return {
        "experiment": experiment,
        "sweep_key": key,
        "seed": seed,
        "episode": episode,
        "step": env.t,
        "agent_id": j,
        "family": LP_FAMILY,
        "kind": LP_KIND,
        "w": t.w,
        "gamma": t.gamma,
        "m_star": t.market_share_target,
        "q_buy": None,
        "q_sell": None,
        "eps_sym": eps_sym,
        "eps_asym": eps_asym,
        "eps": 0.5 * eps_sym + eps_asym,
        "hedge_fraction": float(env_action[2]),
        "lt_choice": None,
        "reward": float(reward),
        "d_spread_pnl": d_spread,
        "d_inventory_pnl": d_inv,
        "inventory": env.ledgers[j].inventory,
        "counterparty": None,
    }


def _lt_row(experiment, key, seed, episode, env, i, action, reward):
    t = env.lt_types[i]
    agent_id = env.lt_agent_id(i)
    _, d_inv, d_spread = env.ledgers[agent_id].last_step_deltas
    return {
        "experiment": experiment,
        "sweep_key": key,
        "seed": seed,
        "episode": episode,
        "step": env.t,
        "agent_id": agent_id,
        "family": LT_FAMILY,
        "kind": env.lt_kind(i),
        "w": t.w,
        "gamma": t.gamma,
        "m_star": None,
        "q_buy": t.flow_targets[0],
        "q_sell": t.flow_targets[1],
        "eps_sym": None,
        "eps_asym": None,
        "eps": None,
        "hedge_fraction": None,
        "lt_choice": LT_ACTION_NAMES[action.choice],
        "reward": float(reward),
        "d_spread_pnl": d_spread,
        "d_inventory_pnl": d_inv,
        "inventory": env.ledgers[agent_id].inventory,
        "counterparty": action.counterparty,
    }


def evaluate_point(env, lp_bundle, lt_bundle, episodes, rng, experiment, key, seed):
    """Roll frozen policies; returns (rows, behavior of the first LT, episode 0)."""
    rows = []
    behavior = {"mids": [], "buys": [], "sells": []}
    for episode in range(episodes):

        def recorder(env, t, lp_env_actions, rewards, info):
            lp_rewards, lt_rewards = rewards
            for j in range(env.n_lp):
                rows.append(
                    _lp_row(experiment, key, seed, episode, env, j,
                            lp_env_actions[j], lp_rewards[j])
                )
            for i in range(env.n_lt):
                action = info["lt_actions"][i]
                rows.append(
                    _lt_row(experiment, key, seed, episode, env, i,
                            action, lt_rewards[i])
                )
                if episode == 0 and i == 0:
                    name = LT_ACTION_NAMES[action.choice]
                    if name == "buy":
                        behavior["buys"].append(t)
                    elif name == "sell":
                        behavior["sells"].append(t)

        run_episode(env, lp_bundle, lt_bundle, rng, update_norm=False, recorder=recorder,
                    deterministic_lp=True)
        if episode == 0:
            behavior["mids"] = [float(m) for m in env.mids]
    return rows, behavior


# -- job execution ----------------------------------------------------------------


def _train_groups(points):
    """Group point indices by identical (train_env, scripted_lp)."""
    groups = []
    for idx, point in enumerate(points):
        for sig, members in groups:
            if sig == (point.train_env, point.scripted_lp):
                members.append(idx)
                break
        else:
            groups.append(((point.train_env, point.scripted_lp), [idx]))
    return [members for _, members in groups]


def _partial_path(out_dir, point_idx: int, seed: int) -> Path:
    return Path(out_dir) / "partial" / f"rows_p{point_idx:03d}_s{seed}.csv"


def _behavior_path(out_dir, point_idx: int, seed: int) -> Path:
    return Path(out_dir) / "partial" / f"behavior_p{point_idx:03d}_s{seed}.json"


def _run_job(spec: ExperimentSpec, member_idx: list, seed: int, model_dict: dict):
    """Train one group for one seed, then evaluate each member point.

    Runs in a worker process; everything it needs travels in the arguments
    and all outputs land in per-(point, seed) files under out_dir/partial.
    """
    model = EcnModel.from_dict(model_dict)
    out_dir = Path(spec.out_dir)
    lead = spec.points[member_idx[0]]
    train_cfg = replace(lead.train_env, seed=seed)

    def env_factory(instance):
        return DealerMarketEnv(train_cfg, model, instance=instance)

    scripted = ScriptedZeroTweakLP() if lead.scripted_lp else None
    lp_bundle, lt_bundle, curves = train(
        env_factory,
        spec.lp_trainer,
        spec.lt_trainer,
        spec.total_steps,
        seed,
        scripted_lp=scripted,
        n_envs=spec.n_envs,
    )

    tag = f"p{member_idx[0]:03d}_s{seed}"
    ckpt_dir = out_dir / "checkpoints"
    if lp_bundle.trainable:
        lp_bundle.save(ckpt_dir / f"lp_{tag}.json")
    lt_bundle.save(ckpt_dir / f"lt_{tag}.json")
    if curves:
        export_csv(curves, out_dir / "curves" / f"curves_{tag}.csv")

    for point_idx in member_idx:
        point = spec.points[point_idx]
        eval_cfg = replace(point.eval_env, seed=seed)
        env = DealerMarketEnv(eval_cfg, model, instance=_EVAL_INSTANCE_BASE + point_idx)
        rng = np.random.default_rng(np.random.SeedSequence((seed, 3, point_idx)))
        rows, behavior = evaluate_point(
            env, lp_bundle, lt_bundle, spec.eval_episodes, rng,
            spec.name, point.key, seed,
        )
        write_rows_csv(rows, _partial_path(out_dir, point_idx, seed))
        with open(_behavior_path(out_dir, point_idx, seed), "w", encoding="utf-8") as fh:
            json.dump(behavior, fh, sort_keys=True)
    return member_idx, seed


def _merge_rows(spec: ExperimentSpec) -> Path:
    """Concatenate partial files in (point, seed) order, streaming."""
    out_path = Path(spec.out_dir) / "rows.csv"
    with open(out_path, "w", encoding="utf-8", newline="") as out:
        out.write(",".join(ROWS_COLUMNS) + "\n")
        for point_idx in range(len(spec.points)):
            for seed in spec.seeds:
                part = _partial_path(spec.out_dir, point_idx, seed)
                with open(part, encoding="utf-8") as fh:
                    next(fh)  # header
                    for line in fh:
                        out.write(line)
    return out_path


def run_experiment(spec: ExperimentSpec, model: EcnModel | None = None, jobs: int = 1):
    """Execute the sweep; returns {"rows": path, "summary": path}.

    Jobs are (training group, seed) pairs and are independent, so the merge
    is deterministic regardless of parallelism.
    """
    if model is None:
        if spec.model_path is not None:
            model = EcnModel.load(spec.model_path)
        else:
            model = build_default_model(DEFAULT_MODEL_SEED)
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_dict = model.to_dict()

    groups = _train_groups(spec.points)
    job_args = [(spec, members, seed) for members in groups for seed in spec.seeds]
    if jobs > 1 and len(job_args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_run_job, s, m, sd, model_dict) for s, m, sd in job_args
            ]
            for fut in futures:
                fut.result()
    else:
        for s, m, sd in job_args:
            _run_job(s, m, sd, model_dict)

    rows_path = _merge_rows(spec)
    summary = summarize(spec, read_rows_csv(rows_path))
    summary_path = out_dir / "summary.json"
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"rows": rows_path, "summary": summary_path}


# -- analyses -------------------------------------------------------------------


def _by_key(rows):
    grouped = {}
    for row in rows:
        grouped.setdefault(row["sweep_key"], []).append(row)
    return grouped


def _hist(values, bins, lo, hi):
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, range=(lo, hi))
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


def tweak_distribution(rows, bins: int = 30):
    """Histograms of eps, eps_sym, eps_asym over LP evaluation steps, per sweep key."""
    rows = [r for r in rows if r["family"] == LP_FAMILY]
    if not rows:
        raise ValueError("no LP rows to histogram")
    out = {}
    for key, group in _by_key(rows).items():
        out[key] = {
            "eps": _hist([r["eps"] for r in group], bins, -1.5, 1.5),
            "eps_sym": _hist([r["eps_sym"] for r in group], bins, -1.0, 1.0),
            "eps_asym": _hist([r["eps_asym"] for r in group], bins, -1.0, 1.0),
            "n_rows": len(group),
        }
    return out


def flow_by_tweak(rows, bucket_width: float = 0.1, lo: float = -1.5, hi: float = 1.5):
    """Mean per-step LT->LP traded volume, bucketed by the LP's eps, per LT kind.

    Bid and ask flow are combined.  The denominator of each bucket is the
    number of LP observations whose eps fell in it, so values read as
    average units attracted per quote at that price quality.
    """
    if not rows:
        raise ValueError("no rows")
    n_buckets = int(round((hi - lo) / bucket_width))
    edges = [lo + i * bucket_width for i in range(n_buckets + 1)]

    def bucket_of(eps: float) -> int:
        b = int((eps - lo) / bucket_width)
        return min(max(b, 0), n_buckets - 1)

    out = {}
    for key, group in _by_key(rows).items():
        lp_eps = {}
        lp_steps = [0] * n_buckets
        for r in group:
            if r["family"] == LP_FAMILY:
                b = bucket_of(r["eps"])
                lp_eps[(r["seed"], r["episode"], r["step"], r["agent_id"])] = b
                lp_steps[b] += 1
        totals = {FLOW_KIND: [0.0] * n_buckets, PNL_KIND: [0.0] * n_buckets}
        for r in group:
            cp = r["counterparty"]
            if r["family"] != LT_FAMILY or cp is None or cp == ECN_ID:
                continue
            b = lp_eps[(r["seed"], r["episode"], r["step"], cp)]
            totals[r["kind"]][b] += 1.0
        mean = {
            kind: [t / s if s else 0.0 for t, s in zip(buckets, lp_steps)]
            for kind, buckets in totals.items()
        }
        out[key] = {
            "edges": edges,
            "lp_steps": lp_steps,
            "totals": {k: list(v) for k, v in totals.items()},
            "mean": mean,
        }
    return out


def pnl_decomposition(rows, bins: int = 20):
    """Per-kind distributions of episode spread and inventory PnL sums."""
    if not rows:
        raise ValueError("no rows")
    out = {}
    for key, group in _by_key(rows).items():
        sums = {}
        for r in group:
            k = (r["kind"], r["seed"], r["episode"], r["agent_id"])
            entry = sums.setdefault(k, [0.0, 0.0])
            entry[0] += r["d_spread_pnl"]
            entry[1] += r["d_inventory_pnl"]
        per_kind = {}
        for (kind, _, _, _), (s, v) in sums.items():
            per_kind.setdefault(kind, ([], []))
            per_kind[kind][0].append(s)
            per_kind[kind][1].append(v)
        result = {}
        for kind, (spread, inv) in per_kind.items():
            spread = np.asarray(spread)
            inv = np.asarray(inv)
            lo = float(min(spread.min(), inv.min()))
            hi = float(max(spread.max(), inv.max()))
            if hi <= lo:
                hi = lo + 1e-9
            result[kind] = {
                "n_episodes": int(spread.size),
                "spread": {
                    "mean": float(spread.mean()),
                    "std": float(spread.std()),
                    "hist": _hist(spread, bins, lo, hi),
                },
                "inventory": {
                    "mean": float(inv.mean()),
                    "std": float(inv.std()),
                    "hist": _hist(inv, bins, lo, hi),
                },
            }
        out[key] = result
    return out


def skew_intensity(rows):
    """Mean |eps_asym| per sweep key, plus the same conditioned on held inventory."""
    rows = [r for r in rows if r["family"] == LP_FAMILY]
    if not rows:
        raise ValueError("no LP rows")
    out = {}
    for key, group in _by_key(rows).items():
        all_vals = [abs(r["eps_asym"]) for r in group]
        active = [abs(r["eps_asym"]) for r in group if abs(r["inventory"]) > 0]
        out[key] = {
            "all": float(np.mean(all_vals)),
            "active": float(np.mean(active)) if active else None,
        }
    return out


def spearman(xs, ys) -> float:
    """Spearman rank correlation with average ranks on ties."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.size < 2:
        raise ValueError("need two equal-length series of length >= 2")

    def ranks(a):
        order = np.argsort(a, kind="stable")
        r = np.empty(a.size)
        sa = a[order]
        i = 0
        while i < a.size:
            j = i
            while j + 1 < a.size and sa[j + 1] == sa[i]:
                j += 1
            r[order[i : j + 1]] = 0.5 * (i + j) + 1.0
            i = j + 1
        return r

    rx, ry = ranks(xs), ranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt((rx * rx).sum() * (ry * ry).sum())
    if denom == 0:
        return 0.0
    return float((rx * ry).sum() / denom)


# -- summary --------------------------------------------------------------------


def _lt_stats(group):
    """Frequencies of executed choices and mean episode PnL, per LT kind."""
    freqs = {}
    counts = {}
    pnl_sums = {}
    for r in group:
        if r["family"] != LT_FAMILY:
            continue
        kind = r["kind"]
        counts.setdefault(kind, {"buy": 0, "sell": 0, "hold": 0})
        counts[kind][r["lt_choice"]] += 1
        k = (kind, r["seed"], r["episode"], r["agent_id"])
        pnl_sums[k] = pnl_sums.get(k, 0.0) + r["d_spread_pnl"] + r["d_inventory_pnl"]
    mean_pnl = {}
    for kind in counts:
        totals = [v for (k, _, _, _), v in pnl_sums.items() if k == kind]
        mean_pnl[kind] = float(np.mean(totals)) if totals else None
        n = sum(counts[kind].values())
        freqs[kind] = {a: c / n for a, c in counts[kind].items()}
    return freqs, mean_pnl


def _point_summary(group):
    lp_rows = [r for r in group if r["family"] == LP_FAMILY]
    stats = {"n_rows": len(group)}
    if lp_rows:
        stats["mean_eps"] = float(np.mean([r["eps"] for r in lp_rows]))
        si = skew_intensity(group)
        (_, vals), = si.items()
        stats["skew_intensity"] = vals["all"]
        stats["skew_intensity_active"] = vals["active"]
    freqs, mean_pnl = _lt_stats(group)
    stats["lt_frequencies"] = freqs
    stats["lt_mean_episode_pnl"] = mean_pnl
    return stats


def summarize(spec: ExperimentSpec, rows) -> dict:
    """Distill rows into the summary.json payload."""
    grouped = _by_key(rows)
    tweaks = tweak_distribution(rows)
    flows = flow_by_tweak(rows)
    pnls = pnl_decomposition(rows)
    points = {}
    for point_idx, point in enumerate(spec.points):
        group = grouped.get(point.key, [])
        entry = _point_summary(group)
        entry["tweak_hist"] = tweaks.get(point.key)
        entry["flow_by_tweak"] = flows.get(point.key)
        entry["pnl_by_kind"] = pnls.get(point.key)
        per_seed = {}
        for seed in spec.seeds:
            seed_rows = [r for r in group if r["seed"] == seed]
            if seed_rows:
                per_seed[str(seed)] = _point_summary(seed_rows)
        entry["per_seed"] = per_seed
        behavior_file = _behavior_path(spec.out_dir, point_idx, spec.seeds[0])
        if behavior_file.exists():
            with open(behavior_file, encoding="utf-8") as fh:
                entry["lt_behavior"] = json.load(fh)
        points[point.key] = entry
    return {
        "experiment": spec.name,
        "seeds": list(spec.seeds),
        "sweep_keys": [p.key for p in spec.points],
        "eval_episodes": spec.eval_episodes,
        "total_steps": spec.total_steps,
        "points": points,
    }


# -- presets -----------------------------------------------------------------------


def preset_toy_trend(
    out_dir,
    seeds=(0, 1, 2, 3, 4),
    w_grid=(0.0, 0.25, 0.75, 1.0),
    episode_len: int = 64,
    total_steps: int = 24_000,
    eval_episodes: int = 100,
    trend_amplitude_ticks: float = 40.0,
    alpha: float = 0.05,
) -> ExperimentSpec:
    """Single taker against a scripted zero-tweak dealer on a sinusoidal trend.

    Each w gets its own training run; alpha keeps the PnL term on the same
    footing as the flow objective so intermediate w trade both off.
    """
    trend = TrendConfig(amplitude_ticks=trend_amplitude_ticks, period_steps=episode_len)
    lt_dist = TypeDistribution(
        family=LT_FAMILY,
        w=0.0,
        alpha=alpha,
        gamma=0.0,
        flow_targets=(0.75, 0.25, 0.0),
    )
    base = EnvConfig(
        n_lp=1,
        n_lt_flow=1,
        n_lt_pnl=0,
        episode_len=episode_len,
        lp_types=TypeDistribution(family=LP_FAMILY, w=1.0, market_share_target=1.0),
        lt_flow_types=lt_dist,
        trend=trend,
    )
    points = []
    for w in w_grid:
        env = replace(base, lt_flow_types=replace(lt_dist, w=float(w)))
        points.append(
            SweepPoint(key=f"w={w}", train_env=env, eval_env=env, scripted_lp=True)
        )
    trainer = TrainerConfig(learning_rate=0.3)
    return ExperimentSpec(
        name="toy-trend",
        points=tuple(points),
        seeds=tuple(seeds),
        lp_trainer=trainer,
        lt_trainer=trainer,
        total_steps=total_steps,
        eval_episodes=eval_episodes,
        out_dir=str(out_dir),
    )


def _population_env(
    n_lp: int,
    n_lt_flow: int,
    n_lt_pnl: int,
    episode_len: int,
    lp_gamma=0.3,
    lp_connect=1.0,
    lp_w: float = 0.5,
    lp_alpha: float = 1.0,
    lt_alpha: float = 0.05,
    trend_amplitude_ticks: float = 0.0,
) -> EnvConfig:
    """Desk-scale population with benign flow and PnL-driven takers.

    A trend overlay makes the mid predictable, which turns LP inventory
    into a profit source and suppresses inventory-flattening skew; only
    sweeps that study adverse selection should enable it.
    """
    trend = TrendConfig()
    if trend_amplitude_ticks > 0.0:
        trend = TrendConfig(
            amplitude_ticks=trend_amplitude_ticks, period_steps=episode_len // 2
        )
    return EnvConfig(
        n_lp=n_lp,
        n_lt_flow=n_lt_flow,
        n_lt_pnl=n_lt_pnl,
        episode_len=episode_len,
        lp_types=TypeDistribution(
            family=LP_FAMILY,
            w=lp_w,
            alpha=lp_alpha,
            gamma=lp_gamma,
            market_share_target=1.0 / n_lp,
            connect_prob_lt=lp_connect,
        ),
        lt_flow_types=TypeDistribution(
            family=LT_FAMILY, w=0.0, alpha=lt_alpha, flow_targets=(0.45, 0.45, 0.1)
        ),
        lt_pnl_types=TypeDistribution(
            family=LT_FAMILY, w=1.0, alpha=lt_alpha, gamma=0.0,
            flow_targets=(1 / 3, 1 / 3, 1 / 3),
        ),
        trend=trend,
    )


def preset_diversity(
    out_dir,
    seeds=(0, 1, 2),
    pnl_counts=(0, 2, 4, 8, 12),
    n_lp: int = 3,
    n_lt_flow: int = 12,
    episode_len: int = 64,
    total_steps: int = 60_000,
    eval_episodes: int = 12,
) -> ExperimentSpec:
    """Population sweep over the number of PnL-driven takers (trains per point)."""
    points = []
    for count in pnl_counts:
        # The trend overlay is what PnL takers pick the dealers off with.
        env = _population_env(n_lp, n_lt_flow, int(count), episode_len,
                              trend_amplitude_ticks=20.0)
        points.append(SweepPoint(key=f"n_pnl={count}", train_env=env, eval_env=env))
    return ExperimentSpec(
        name="diversity",
        points=tuple(points),
        seeds=tuple(seeds),
        lp_trainer=TrainerConfig(learning_rate=0.03, entropy_coef=0.0),
        lt_trainer=TrainerConfig(learning_rate=0.3),
        total_steps=total_steps,
        eval_episodes=eval_episodes,
        out_dir=str(out_dir),
    )


def preset_connectivity(
    out_dir,
    seeds=(0, 1, 2),
    probs=(0.1, 0.25, 0.5, 0.75, 1.0),
    n_lp: int = 2,
    n_lt_flow: int = 6,
    n_lt_pnl: int = 2,
    episode_len: int = 64,
    total_steps: int = 60_000,
    eval_episodes: int = 12,
) -> ExperimentSpec:
    """Sweep the dealer's probability of being connected to each benign taker.

    PnL takers stay fully connected.  Each probability trains its own
    policies: the sparser the benign flow, the harder a dealer has to
    work its quotes to recycle inventory.
    """
    points = tuple(
        SweepPoint(
            key=f"p={p}",
            train_env=(env := _population_env(
                n_lp, n_lt_flow, n_lt_pnl, episode_len,
                lp_gamma=0.5, lp_connect=float(p),
            )),
            eval_env=env,
        )
        for p in probs
    )
    return ExperimentSpec(
        name="connectivity",
        points=points,
        seeds=tuple(seeds),
        lp_trainer=TrainerConfig(learning_rate=0.03, entropy_coef=0.0),
        lt_trainer=TrainerConfig(learning_rate=0.3),
        total_steps=total_steps,
        eval_episodes=eval_episodes,
        out_dir=str(out_dir),
    )


def preset_risk_aversion(
    out_dir,
    seeds=(0, 1, 2),
    gammas=(0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9),
    n_lp: int = 2,
    n_lt_flow: int = 6,
    n_lt_pnl: int = 2,
    episode_len: int = 64,
    total_steps: int = 60_000,
    eval_episodes: int = 12,
) -> ExperimentSpec:
    """Sweep the dealer's risk aversion; each grid point trains its own policies."""
    points = tuple(
        SweepPoint(
            key=f"gamma={g}",
            train_env=(env := _population_env(
                n_lp, n_lt_flow, n_lt_pnl, episode_len, lp_gamma=float(g),
            )),
            eval_env=env,
        )
        for g in gammas
    )
    return ExperimentSpec(
        name="risk-aversion",
        points=points,
        seeds=tuple(seeds),
        lp_trainer=TrainerConfig(learning_rate=0.03, entropy_coef=0.0),
        lt_trainer=TrainerConfig(learning_rate=0.3),
        total_steps=total_steps,
        eval_episodes=eval_episodes,
        out_dir=str(out_dir),
    )


PRESETS = {
    "toy-trend": preset_toy_trend,
    "diversity": preset_diversity,
    "connectivity": preset_connectivity,
    "risk-aversion": preset_risk_aversion,
}

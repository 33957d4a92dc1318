"""Regenerate the miniature experiment outputs used by the frontend tests.

Runs four tiny sweeps (seconds each) and copies rows.csv + summary.json into
frontend/test/fixtures/runs/<study>/. The fixtures are committed; rerun this
only when the experiment output schema changes.
"""

import shutil
import tempfile
from pathlib import Path

from dealersim.agents import LP_FAMILY, LT_FAMILY, TypeDistribution
from dealersim.ecnmodel import build_default_model
from dealersim.env import ConnectivityConfig, EnvConfig, TrendConfig
from dealersim.experiments import ExperimentSpec, SweepPoint, run_experiment
from dealersim.ppo import TrainerConfig

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "test" / "fixtures" / "runs"

TRAINER = TrainerConfig(hidden=(8, 8), minibatch_size=16, episodes_per_iter=4)


def env(**kw):
    base = dict(n_lp=1, n_lt_flow=1, n_lt_pnl=0, episode_len=16)
    base.update(kw)
    return EnvConfig(**base)


def spec(name, points, seeds, out_dir):
    return ExperimentSpec(
        name=name,
        points=tuple(points),
        seeds=seeds,
        lp_trainer=TRAINER,
        lt_trainer=TRAINER,
        total_steps=64,
        eval_episodes=2,
        out_dir=str(out_dir),
    )


def toy_points():
    trend = TrendConfig(amplitude_ticks=6, period_steps=16)
    for w in (0.0, 1.0):
        lt = TypeDistribution(family=LT_FAMILY, w=w, flow_targets=(0.75, 0.25, 0.0))
        cfg = env(trend=trend, lt_flow_types=lt)
        yield SweepPoint(key=f"w={w}", train_env=cfg, eval_env=cfg)


def diversity_points():
    for n_pnl in (0, 2):
        cfg = env(n_lt_flow=2, n_lt_pnl=n_pnl)
        yield SweepPoint(key=f"n_pnl={n_pnl}", train_env=cfg, eval_env=cfg)


def connectivity_points():
    for p in (0.1, 1.0):
        cfg = env(n_lt_flow=2, connectivity=ConnectivityConfig(lt_lp=p))
        yield SweepPoint(key=f"p={p}", train_env=cfg, eval_env=cfg)


def risk_points():
    for gamma in (0.0, 0.9):
        lp = TypeDistribution(family=LP_FAMILY, w=0.5, gamma=gamma, market_share_target=1.0)
        cfg = env(lp_types=lp)
        yield SweepPoint(key=f"gamma={gamma}", train_env=cfg, eval_env=cfg)


def main():
    model = build_default_model()
    studies = {
        "toy": spec("toy-trend", toy_points(), (0,), "unused"),
        "diversity": spec("diversity", diversity_points(), (0,), "unused"),
        "connectivity": spec("connectivity", connectivity_points(), (0, 1), "unused"),
        "risk": spec("risk-aversion", risk_points(), (0, 1), "unused"),
    }
    for label, study in studies.items():
        dest = FIXTURES / label
        with tempfile.TemporaryDirectory() as tmp:
            from dataclasses import replace

            paths = run_experiment(replace(study, out_dir=tmp), model=model, jobs=1)
            dest.mkdir(parents=True, exist_ok=True)
            shutil.copy(paths["rows"], dest / "rows.csv")
            shutil.copy(paths["summary"], dest / "summary.json")
        size = (dest / "rows.csv").stat().st_size
        print(f"{label}: rows.csv {size} bytes -> {dest}")


if __name__ == "__main__":
    main()

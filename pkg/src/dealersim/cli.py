"""Command-line entry point: calibrate | train | evaluate | experiment.

One YAML config drives every subcommand; unknown keys are rejected anywhere
in the tree, and the fully resolved configuration is materialized as
effective-config.yaml next to the outputs.  All errors surface as a single
``error: <reason>`` line on stderr with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
import yaml

from .agents import LP_FAMILY, LT_FAMILY, TypeDistribution, lp_observation_dim, lt_observation_dim
from .ecnmodel import (
    EcnModel,
    SynthConfig,
    build_default_model,
    calibrate,
    read_l2_csv,
    synth_l2_dataset,
    write_l2_csv,
)
from .env import ConnectivityConfig, DealerMarketEnv, EnvConfig, TrendConfig
from .experiments import (
    DEFAULT_MODEL_SEED,
    PRESETS,
    _EVAL_INSTANCE_BASE,
    evaluate_point,
    export_csv,
    write_rows_csv,
)
from .policy import ScriptedZeroTweakLP
from .ppo import PolicyBundle, TrainerConfig, train


class ConfigError(ValueError):
    pass


_TOP_KEYS = ("seed", "env", "calibrate", "train", "evaluate", "experiment")


def _check_keys(data: dict, allowed, ctx: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{ctx}: unknown keys {unknown}")


def _field_names(cls) -> list:
    return [f.name for f in dataclasses.fields(cls)]


def _build(cls, data: dict | None, ctx: str):
    data = dict(data or {})
    _check_keys(data, _field_names(cls), ctx)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{ctx}: {exc}") from exc


def build_type_distribution(data: dict | None, default_family: str, ctx: str) -> TypeDistribution:
    data = dict(data or {})
    data.setdefault("family", default_family)
    if data.get("flow_targets") is not None:
        data["flow_targets"] = tuple(data["flow_targets"])
    return _build(TypeDistribution, data, ctx)


def build_env_config(data: dict | None, ctx: str = "env") -> EnvConfig:
    data = dict(data or {})
    _check_keys(data, _field_names(EnvConfig), ctx)
    if "lp_types" in data:
        data["lp_types"] = build_type_distribution(data["lp_types"], LP_FAMILY, f"{ctx}.lp_types")
    if "lt_flow_types" in data:
        data["lt_flow_types"] = build_type_distribution(
            data["lt_flow_types"], LT_FAMILY, f"{ctx}.lt_flow_types"
        )
    if "lt_pnl_types" in data:
        data["lt_pnl_types"] = build_type_distribution(
            data["lt_pnl_types"], LT_FAMILY, f"{ctx}.lt_pnl_types"
        )
    if "connectivity" in data:
        data["connectivity"] = _build(
            ConnectivityConfig, data["connectivity"], f"{ctx}.connectivity"
        )
    if "trend" in data:
        data["trend"] = _build(TrendConfig, data["trend"], f"{ctx}.trend")
    return _build(EnvConfig, data, ctx)


def build_trainer_config(data: dict | None, ctx: str) -> TrainerConfig:
    data = dict(data or {})
    if "hidden" in data:
        data["hidden"] = tuple(data["hidden"])
    return _build(TrainerConfig, data, ctx)


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config parse failure: {exc}")
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys(data, _TOP_KEYS, "config")
    return data


def _write_effective(effective: dict, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "effective-config.yaml", "w", encoding="utf-8") as fh:
        yaml.safe_dump(effective, fh, sort_keys=True)


def _resolve_model(path) -> EcnModel:
    if path is not None:
        try:
            return EcnModel.load(path)
        except FileNotFoundError:
            raise ConfigError(f"model file not found: {path}")
    return build_default_model(DEFAULT_MODEL_SEED)


def _check_dims(bundle, expected: int, family: str) -> None:
    got = bundle.policy.net.layer_sizes[0]
    if got != expected:
        raise ConfigError(
            f"{family} checkpoint expects obs dim {got}, env needs {expected}"
        )


# -- subcommands -------------------------------------------------------------------


def cmd_calibrate(config: dict, args) -> int:
    section = dict(config.get("calibrate") or {})
    _check_keys(
        section,
        ("data_csv", "synth", "k_init", "k_delta", "k_decomp", "dt", "save_data"),
        "calibrate",
    )
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    synth_cfg = _build(SynthConfig, section.get("synth"), "calibrate.synth")
    out_dir = Path(args.out or "runs/calibrate")

    effective = {
        "seed": seed,
        "calibrate": {
            "data_csv": section.get("data_csv"),
            "synth": asdict(synth_cfg),
            "k_init": int(section.get("k_init", 3)),
            "k_delta": int(section.get("k_delta", 3)),
            "k_decomp": int(section.get("k_decomp", 2)),
            "dt": int(section.get("dt", 1)),
            "save_data": bool(section.get("save_data", False)),
        },
    }
    if args.dry_run:
        print(yaml.safe_dump(effective, sort_keys=True).rstrip())
        return 0
    _write_effective(effective, out_dir)

    data_csv = section.get("data_csv")
    if data_csv is not None:
        try:
            rows = read_l2_csv(data_csv)
        except FileNotFoundError:
            raise ConfigError(f"data file not found: {data_csv}")
    else:
        rows = synth_l2_dataset(synth_cfg, np.random.default_rng(seed))
        if effective["calibrate"]["save_data"]:
            write_l2_csv(rows, out_dir / "l2_data.csv")

    cal = effective["calibrate"]
    model = calibrate(
        rows, k_init=cal["k_init"], k_delta=cal["k_delta"],
        k_decomp=cal["k_decomp"], dt=cal["dt"], seed=seed,
    )
    model_path = out_dir / "model.json"
    model.save(model_path)
    for name, trace in model.fit_traces.items():
        print(
            f"{name}: log-likelihood {trace[0]:.6f} -> {trace[-1]:.6f} "
            f"({len(trace)} iterations)"
        )
    print(f"wrote {model_path}")
    return 0


def cmd_train(config: dict, args) -> int:
    section = dict(config.get("train") or {})
    _check_keys(
        section,
        ("total_steps", "n_envs", "scripted_lp", "model", "resume", "lp_trainer", "lt_trainer"),
        "train",
    )
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    env_cfg = build_env_config(config.get("env"))
    lp_trainer = build_trainer_config(section.get("lp_trainer"), "train.lp_trainer")
    lt_trainer = build_trainer_config(section.get("lt_trainer"), "train.lt_trainer")
    total_steps = int(section.get("total_steps", 50_000))
    n_envs = int(section.get("n_envs", 1))
    scripted = bool(section.get("scripted_lp", False))
    out_dir = Path(args.out or "runs/train")

    effective = {
        "seed": seed,
        "env": asdict(env_cfg),
        "train": {
            "total_steps": total_steps,
            "n_envs": n_envs,
            "scripted_lp": scripted,
            "model": section.get("model"),
            "resume": section.get("resume"),
            "lp_trainer": asdict(lp_trainer),
            "lt_trainer": asdict(lt_trainer),
        },
    }
    if args.dry_run:
        print(yaml.safe_dump(effective, sort_keys=True).rstrip())
        return 0
    _write_effective(effective, out_dir)

    model = _resolve_model(section.get("model"))
    run_cfg = replace(env_cfg, seed=seed)

    lp_bundle = lt_bundle = None
    old_curves = []
    resume = section.get("resume")
    if resume is not None:
        resume = Path(resume)
        lt_bundle = PolicyBundle.load(resume / "checkpoint_lt.json")
        lp_ckpt = resume / "checkpoint_lp.json"
        if not scripted and lp_ckpt.exists():
            lp_bundle = PolicyBundle.load(lp_ckpt)
        curves_file = resume / "curves.csv"
        if curves_file.exists():
            import csv as _csv

            with open(curves_file, encoding="utf-8", newline="") as fh:
                old_curves = list(_csv.DictReader(fh))
    if lp_bundle is not None:
        _check_dims(lp_bundle, lp_observation_dim(run_cfg.n_levels), "LP")
    if lt_bundle is not None:
        _check_dims(lt_bundle, lt_observation_dim(run_cfg.n_lp), "LT")

    lp_bundle, lt_bundle, curves = train(
        lambda instance: DealerMarketEnv(run_cfg, model, instance=instance),
        lp_trainer,
        lt_trainer,
        total_steps,
        seed,
        scripted_lp=ScriptedZeroTweakLP() if scripted else None,
        n_envs=n_envs,
        lp_bundle=lp_bundle,
        lt_bundle=lt_bundle,
    )

    if lp_bundle.trainable:
        lp_bundle.save(out_dir / "checkpoint_lp.json")
    lt_bundle.save(out_dir / "checkpoint_lt.json")
    export_csv(list(old_curves) + list(curves), out_dir / "curves.csv")
    print(f"trained {total_steps} steps over {len(curves)} iterations; wrote {out_dir}")
    return 0


def cmd_evaluate(config: dict, args) -> int:
    section = dict(config.get("evaluate") or {})
    _check_keys(
        section,
        ("checkpoint_lp", "checkpoint_lt", "episodes", "model", "scripted_lp"),
        "evaluate",
    )
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    env_cfg = build_env_config(config.get("env"))
    episodes = int(section.get("episodes", 20))
    scripted = bool(section.get("scripted_lp", False))
    if section.get("checkpoint_lt") is None:
        raise ConfigError("evaluate.checkpoint_lt is required")
    if not scripted and section.get("checkpoint_lp") is None:
        raise ConfigError("evaluate.checkpoint_lp is required unless scripted_lp")
    out_dir = Path(args.out or "runs/evaluate")

    effective = {
        "seed": seed,
        "env": asdict(env_cfg),
        "evaluate": {
            "checkpoint_lp": section.get("checkpoint_lp"),
            "checkpoint_lt": section.get("checkpoint_lt"),
            "episodes": episodes,
            "model": section.get("model"),
            "scripted_lp": scripted,
        },
    }
    if args.dry_run:
        print(yaml.safe_dump(effective, sort_keys=True).rstrip())
        return 0
    _write_effective(effective, out_dir)

    model = _resolve_model(section.get("model"))
    run_cfg = replace(env_cfg, seed=seed)
    try:
        lt_bundle = PolicyBundle.load(section["checkpoint_lt"])
    except FileNotFoundError:
        raise ConfigError(f"checkpoint not found: {section['checkpoint_lt']}")
    _check_dims(lt_bundle, lt_observation_dim(run_cfg.n_lp), "LT")
    if scripted:
        from .ppo import ScriptedBundle

        lp_bundle = ScriptedBundle(ScriptedZeroTweakLP(), LP_FAMILY)
    else:
        try:
            lp_bundle = PolicyBundle.load(section["checkpoint_lp"])
        except FileNotFoundError:
            raise ConfigError(f"checkpoint not found: {section['checkpoint_lp']}")
        _check_dims(lp_bundle, lp_observation_dim(run_cfg.n_levels), "LP")

    env = DealerMarketEnv(run_cfg, model, instance=_EVAL_INSTANCE_BASE)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 3, 0)))
    rows, _ = evaluate_point(
        env, lp_bundle, lt_bundle, episodes, rng, "evaluate", "eval", seed
    )
    write_rows_csv(rows, out_dir / "rows.csv")
    print(f"evaluated {episodes} episodes; wrote {out_dir / 'rows.csv'}")
    return 0


def cmd_experiment(config: dict, args) -> int:
    import inspect

    from .experiments import run_experiment

    section = dict(config.get("experiment") or {})
    _check_keys(section, ("preset", "options", "model"), "experiment")
    preset_name = section.get("preset")
    if preset_name not in PRESETS:
        raise ConfigError(
            f"unknown preset {preset_name!r}; available: {sorted(PRESETS)}"
        )
    preset_fn = PRESETS[preset_name]
    options = dict(section.get("options") or {})
    allowed = [p for p in inspect.signature(preset_fn).parameters if p != "out_dir"]
    _check_keys(options, allowed, "experiment.options")
    if args.seed is not None and "seeds" not in options:
        options["seeds"] = (args.seed,)
    out_dir = Path(args.out or f"runs/{preset_name}")

    try:
        spec = preset_fn(out_dir=str(out_dir), **options)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"experiment.options: {exc}") from exc

    resolved = {
        "experiment": {
            "preset": preset_name,
            "options": {k: list(v) if isinstance(v, tuple) else v for k, v in options.items()},
            "model": section.get("model"),
        },
        "spec": {
            "name": spec.name,
            "sweep_keys": [p.key for p in spec.points],
            "seeds": list(spec.seeds),
            "total_steps": spec.total_steps,
            "eval_episodes": spec.eval_episodes,
            "out_dir": spec.out_dir,
        },
    }
    if args.dry_run:
        print(yaml.safe_dump(resolved, sort_keys=True).rstrip())
        return 0
    _write_effective(resolved, out_dir)

    model = None
    if section.get("model") is not None:
        model = _resolve_model(section["model"])
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    paths = run_experiment(spec, model=model, jobs=jobs)

    with open(paths["summary"], encoding="utf-8") as fh:
        json.load(fh)
    if not Path(paths["rows"]).stat().st_size:
        raise RuntimeError("rows.csv is empty")
    print(f"wrote {paths['rows']} and {paths['summary']}")
    return 0


# -- entry point --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dealersim")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("calibrate", "fit the order-book mixtures and write a model file"),
        ("train", "train the shared LP/LT policies"),
        ("evaluate", "roll frozen checkpoints and write metric rows"),
        ("experiment", "run a named experiment preset"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="YAML config path")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--dry-run", action="store_true")
    return parser


_COMMANDS = {
    "calibrate": cmd_calibrate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        return _COMMANDS[args.command](config, args)
    except Exception as exc:  # single-line machine-parsable contract
        reason = str(exc).replace("\n", "; ")
        print(f"error: {type(exc).__name__}: {reason}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

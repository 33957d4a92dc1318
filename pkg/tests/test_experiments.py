import json
from dataclasses import replace

import numpy as np
import pytest

from dealersim.env import EnvConfig
from dealersim.experiments import (
    PRESETS,
    ROWS_COLUMNS,
    ExperimentSpec,
    SweepPoint,
    _fmt,
    _train_groups,
    export_csv,
    flow_by_tweak,
    pnl_decomposition,
    preset_connectivity,
    preset_diversity,
    preset_risk_aversion,
    preset_toy_trend,
    read_rows_csv,
    run_experiment,
    skew_intensity,
    spearman,
    summarize,
    tweak_distribution,
    write_rows_csv,
)
from dealersim.marketcore import ECN_ID
from dealersim.ppo import TrainerConfig


def lp_row(**kw):
    base = dict.fromkeys(ROWS_COLUMNS)
    base.update(
        experiment="t", sweep_key="k", seed=0, episode=0, step=1, agent_id=0,
        family="LP", kind="LP", w=0.5, gamma=0.0, m_star=0.5,
        eps_sym=0.0, eps_asym=0.0, eps=0.0, hedge_fraction=0.0,
        reward=0.0, d_spread_pnl=0.0, d_inventory_pnl=0.0, inventory=0.0,
    )
    base.update(kw)
    return base


def lt_row(**kw):
    base = dict.fromkeys(ROWS_COLUMNS)
    base.update(
        experiment="t", sweep_key="k", seed=0, episode=0, step=1, agent_id=1,
        family="LT", kind="Flow", w=0.0, gamma=0.0, q_buy=0.75, q_sell=0.25,
        lt_choice="hold", reward=0.0, d_spread_pnl=0.0, d_inventory_pnl=0.0,
        inventory=0.0,
    )
    base.update(kw)
    return base


# -- CSV plumbing -------------------------------------------------------------


def test_fmt_rules():
    assert _fmt(None) == ""
    assert _fmt(0.1) == "0.1"
    assert _fmt(1 / 3) == repr(1 / 3)
    assert _fmt(np.int64(7)) == "7"
    assert _fmt("Flow") == "Flow"


def test_rows_csv_round_trip(tmp_path):
    rows = [
        lp_row(eps=0.25, eps_sym=0.5, eps_asym=0.0, inventory=-2.0),
        lt_row(lt_choice="buy", counterparty=ECN_ID, d_spread_pnl=-0.05),
        lt_row(step=2, lt_choice="hold", counterparty=None),
    ]
    path = tmp_path / "rows.csv"
    write_rows_csv(rows, path)
    back = read_rows_csv(path)
    assert back == rows


def test_rows_csv_rejects_foreign_headers(tmp_path):
    path = tmp_path / "rows.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_rows_csv(path)


def test_export_csv_unions_fields_in_first_seen_order(tmp_path):
    records = [{"a": 1, "b": 2.5}, {"b": 3.0, "c": None}]
    path = tmp_path / "out.csv"
    export_csv(records, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "a,b,c"
    assert lines[1] == "1,2.5,"
    assert lines[2] == ",3.0,"


# -- analyses -----------------------------------------------------------------


def test_tweak_distribution_buckets_all_lp_rows():
    rows = [lp_row(eps=0.05, step=s) for s in range(4)]
    rows += [lp_row(eps=-1.45, step=9)]
    rows += [lt_row()]  # ignored
    out = tweak_distribution(rows)
    hist = out["k"]["eps"]
    assert out["k"]["n_rows"] == 5
    assert sum(hist["counts"]) == 5
    assert hist["counts"][15] == 4  # eps in [0.0, 0.1)
    assert hist["counts"][0] == 1
    with pytest.raises(ValueError):
        tweak_distribution([lt_row()])


def test_tweak_distribution_groups_by_sweep_key():
    rows = [lp_row(sweep_key="a"), lp_row(sweep_key="b"), lp_row(sweep_key="b", step=2)]
    out = tweak_distribution(rows)
    assert out["a"]["n_rows"] == 1 and out["b"]["n_rows"] == 2


def test_flow_by_tweak_attributes_trades_to_the_quoting_lp():
    rows = [
        lp_row(step=1, eps=0.0),
        lt_row(step=1, lt_choice="buy", counterparty=0),
        lp_row(step=2, eps=0.0),
        lt_row(step=2, lt_choice="hold", counterparty=None),
        lt_row(step=2, agent_id=2, kind="PnL", w=1.0, lt_choice="sell",
               counterparty=ECN_ID),  # ECN trade, never attributed
    ]
    out = flow_by_tweak(rows)["k"]
    b = 15  # eps = 0.0 falls in [0.0, 0.1)
    assert out["lp_steps"][b] == 2
    assert out["totals"]["Flow"][b] == 1.0
    assert out["totals"]["PnL"][b] == 0.0
    assert out["mean"]["Flow"][b] == 0.5
    assert sum(out["lp_steps"]) == 2


def test_flow_by_tweak_separates_kinds():
    rows = [
        lp_row(step=1, eps=-0.5),
        lt_row(step=1, lt_choice="buy", counterparty=0),
        lt_row(step=1, agent_id=2, kind="PnL", w=1.0, lt_choice="sell", counterparty=0),
    ]
    out = flow_by_tweak(rows)["k"]
    b = 10  # eps = -0.5
    assert out["mean"]["Flow"][b] == 1.0
    assert out["mean"]["PnL"][b] == 1.0


def test_pnl_decomposition_sums_per_episode():
    rows = [
        lt_row(step=1, d_spread_pnl=1.0, d_inventory_pnl=-0.5),
        lt_row(step=2, d_spread_pnl=0.5, d_inventory_pnl=0.0),
        lt_row(episode=1, step=1, d_spread_pnl=0.5, d_inventory_pnl=0.25),
    ]
    out = pnl_decomposition(rows)["k"]["Flow"]
    assert out["n_episodes"] == 2
    assert out["spread"]["mean"] == pytest.approx(1.0)
    assert out["spread"]["std"] == pytest.approx(0.5)
    assert out["inventory"]["mean"] == pytest.approx(-0.125)


def test_pnl_decomposition_quiet_market_is_all_zero():
    rows = [lt_row(step=s) for s in range(1, 4)]
    out = pnl_decomposition(rows)["k"]["Flow"]
    assert out["spread"]["mean"] == 0.0 and out["inventory"]["mean"] == 0.0
    assert out["n_episodes"] == 1


def test_skew_intensity_splits_active_inventory():
    rows = [
        lp_row(step=1, eps_asym=0.2, inventory=0.0),
        lp_row(step=2, eps_asym=-0.4, inventory=1.0),
        lp_row(step=3, eps_asym=0.0, inventory=-2.0),
    ]
    out = skew_intensity(rows)["k"]
    assert out["all"] == pytest.approx(0.2)
    assert out["active"] == pytest.approx(0.2)


def test_skew_intensity_flat_book_has_no_active_reading():
    out = skew_intensity([lp_row(eps_asym=0.3, inventory=0.0)])["k"]
    assert out["all"] == pytest.approx(0.3)
    assert out["active"] is None


def test_spearman_basics():
    assert spearman([1, 2, 3], [10, 40, 90]) == pytest.approx(1.0)
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert spearman([1, 1, 1], [1, 2, 3]) == 0.0  # degenerate ranks
    assert spearman([1, 1, 2], [1, 2, 3]) == pytest.approx(np.sqrt(3) / 2)
    with pytest.raises(ValueError):
        spearman([1], [1])
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2, 3])


def test_spearman_is_rank_based():
    rng = np.random.default_rng(0)
    x = rng.normal(size=50)
    assert spearman(x, np.exp(x)) == pytest.approx(1.0)


# -- spec validation and grouping -----------------------------------------------


def tiny_env(**kw):
    base = dict(n_lp=1, n_lt_flow=1, n_lt_pnl=0, episode_len=8)
    base.update(kw)
    return EnvConfig(**base)


def test_experiment_spec_validation():
    env = tiny_env()
    point = SweepPoint(key="a", train_env=env, eval_env=env)
    with pytest.raises(ValueError):
        ExperimentSpec(name="x", points=(), seeds=(0,))
    with pytest.raises(ValueError):
        ExperimentSpec(name="x", points=(point,), seeds=())
    with pytest.raises(ValueError):
        ExperimentSpec(name="x", points=(point, point), seeds=(0,))
    with pytest.raises(ValueError):
        ExperimentSpec(name="x", points=(point,), seeds=(0,), eval_episodes=0)


def test_train_groups_share_identical_train_envs():
    shared = tiny_env()
    other = tiny_env(episode_len=16)
    points = [
        SweepPoint(key="a", train_env=shared, eval_env=shared),
        SweepPoint(key="b", train_env=shared, eval_env=other),
        SweepPoint(key="c", train_env=other, eval_env=other),
        SweepPoint(key="d", train_env=shared, eval_env=shared, scripted_lp=True),
    ]
    assert _train_groups(points) == [[0, 1], [2], [3]]


# -- end to end -------------------------------------------------------------------


def tiny_spec(out_dir, seeds=(0, 1)):
    train = tiny_env()
    points = (
        SweepPoint(key="base", train_env=train, eval_env=train),
        SweepPoint(key="alt", train_env=train,
                   eval_env=replace(train, episode_len=4)),
    )
    trainer = TrainerConfig(hidden=(8, 8), minibatch_size=16, episodes_per_iter=4)
    return ExperimentSpec(
        name="tiny",
        points=points,
        seeds=seeds,
        lp_trainer=trainer,
        lt_trainer=trainer,
        total_steps=64,
        eval_episodes=2,
        out_dir=str(out_dir),
    )


def run_tiny(tmp_path, name, model, jobs=1):
    spec = tiny_spec(tmp_path / name)
    paths = run_experiment(spec, model=model, jobs=jobs)
    return spec, paths


def test_run_experiment_end_to_end(tmp_path, default_model):
    spec, paths = run_tiny(tmp_path, "run", default_model)
    rows = read_rows_csv(paths["rows"])
    # two points x two seeds x two episodes, per-step rows for 1 LP + 1 LT
    expected = 2 * 2 * (8 + 4) * 2
    assert len(rows) == expected
    keys = [r["sweep_key"] for r in rows]
    assert keys == sorted(keys, key=["base", "alt"].index)  # point-major order

    summary = json.loads(paths["summary"].read_text())
    assert summary["experiment"] == "tiny"
    assert summary["sweep_keys"] == ["base", "alt"]
    assert summary["seeds"] == [0, 1]
    for key in ("base", "alt"):
        entry = summary["points"][key]
        assert {"n_rows", "mean_eps", "skew_intensity", "lt_frequencies",
                "lt_mean_episode_pnl", "tweak_hist", "flow_by_tweak",
                "pnl_by_kind", "per_seed", "lt_behavior"} <= set(entry)
        assert set(entry["per_seed"]) == {"0", "1"}
        freqs = entry["lt_frequencies"]["Flow"]
        assert sum(freqs.values()) == pytest.approx(1.0)
    ckpts = sorted(p.name for p in (tmp_path / "run").glob("checkpoints/*.json"))
    assert ckpts == ["lp_p000_s0.json", "lp_p000_s1.json",
                     "lt_p000_s0.json", "lt_p000_s1.json"]


def test_run_experiment_is_deterministic(tmp_path, default_model):
    _, first = run_tiny(tmp_path, "a", default_model)
    _, second = run_tiny(tmp_path, "b", default_model)
    assert first["rows"].read_bytes() == second["rows"].read_bytes()
    assert first["summary"].read_bytes() == second["summary"].read_bytes()


def test_run_experiment_parallel_jobs_match_serial(tmp_path, default_model):
    _, serial = run_tiny(tmp_path, "serial", default_model)
    _, parallel = run_tiny(tmp_path, "parallel", default_model, jobs=2)
    assert serial["rows"].read_bytes() == parallel["rows"].read_bytes()
    assert serial["summary"].read_bytes() == parallel["summary"].read_bytes()


def test_summarize_offline_matches_run(tmp_path, default_model):
    spec, paths = run_tiny(tmp_path, "offline", default_model)
    summary = json.loads(paths["summary"].read_text())
    again = summarize(spec, read_rows_csv(paths["rows"]))
    assert json.loads(json.dumps(again)) == summary


# -- presets ------------------------------------------------------------------


def test_preset_registry_covers_the_four_studies():
    assert set(PRESETS) == {"toy-trend", "diversity", "connectivity", "risk-aversion"}


def test_preset_grids(tmp_path):
    toy = preset_toy_trend(tmp_path)
    assert [p.key for p in toy.points] == ["w=0.0", "w=0.25", "w=0.75", "w=1.0"]
    assert all(p.scripted_lp for p in toy.points)
    assert toy.seeds == (0, 1, 2, 3, 4)

    div = preset_diversity(tmp_path)
    assert [p.key for p in div.points][0] == "n_pnl=0"
    assert div.points[2].train_env.n_lt_pnl == 4
    assert div.points[0].train_env.trend.amplitude_ticks == 20.0

    conn = preset_connectivity(tmp_path)
    assert conn.points[0].train_env.lp_types.connect_prob_lt == 0.1
    assert conn.points[0].train_env.trend.amplitude_ticks == 0.0

    risk = preset_risk_aversion(tmp_path)
    assert [p.train_env.lp_types.gamma for p in risk.points] == [
        0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9
    ]
    # every grid point trains separately
    assert len(_train_groups(risk.points)) == len(risk.points)

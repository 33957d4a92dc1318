"""Single-LT study on a trending mid: sweep the PnL weight w.

A scripted zero-tweak LP quotes the reference spread while one flow taker
trains against a sinusoidal mid trend.  At w=0 the taker should track its
(buy, sell) target mix; as w grows it should trade the trend instead.
"""

import argparse
import json

from dealersim.experiments import preset_toy_trend, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/toy-trend")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--total-steps", type=int, default=24_000)
    ap.add_argument("--eval-episodes", type=int, default=100)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    spec = preset_toy_trend(
        args.out,
        seeds=tuple(args.seeds),
        total_steps=args.total_steps,
        eval_episodes=args.eval_episodes,
    )
    paths = run_experiment(spec, jobs=args.jobs)
    summary = json.load(open(paths["summary"]))
    for key in summary["sweep_keys"]:
        point = summary["points"][key]
        freqs = point["lt_frequencies"]["Flow"]
        pnl = point["lt_mean_episode_pnl"]["Flow"]
        print(f"{key}: buy {freqs['buy']:.3f} sell {freqs['sell']:.3f} "
              f"hold {freqs['hold']:.3f} | episode pnl {pnl:.3f}")
    print(f"wrote {paths['rows']} and {paths['summary']}")


if __name__ == "__main__":
    main()

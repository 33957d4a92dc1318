"""Sweep the number of PnL-driven takers and watch LP pricing shift.

More informed flow should push the trained LPs toward conservative
(positive-eps) pricing; the summary's mean_eps per point tracks that.
"""

import argparse
import json

from dealersim.experiments import preset_diversity, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/diversity")
    ap.add_argument("--counts", type=int, nargs="+", default=[0, 2, 4, 8, 12])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--total-steps", type=int, default=60_000)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    spec = preset_diversity(
        args.out,
        pnl_counts=tuple(args.counts),
        seeds=tuple(args.seeds),
        total_steps=args.total_steps,
    )
    paths = run_experiment(spec, jobs=args.jobs)
    summary = json.load(open(paths["summary"]))
    for key in summary["sweep_keys"]:
        point = summary["points"][key]
        per_seed = {s: round(v["mean_eps"], 4) for s, v in point["per_seed"].items()}
        print(f"{key}: mean eps {point['mean_eps']:.4f} per seed {per_seed}")
    print(f"wrote {paths['rows']} and {paths['summary']}")


if __name__ == "__main__":
    main()

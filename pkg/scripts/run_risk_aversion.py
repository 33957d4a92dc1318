"""Sweep the LP inventory-risk penalty gamma and read off skew intensity.

Higher gamma makes holding inventory expensive, so trained LPs skew more
aggressively to shed it.
"""

import argparse
import json

from dealersim.experiments import preset_risk_aversion, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/risk-aversion")
    ap.add_argument("--gammas", type=float, nargs="+",
                    default=[0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--total-steps", type=int, default=60_000)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    spec = preset_risk_aversion(
        args.out,
        gammas=tuple(args.gammas),
        seeds=tuple(args.seeds),
        total_steps=args.total_steps,
    )
    paths = run_experiment(spec, jobs=args.jobs)
    summary = json.load(open(paths["summary"]))
    for key in summary["sweep_keys"]:
        point = summary["points"][key]
        per_seed = {s: round(v["skew_intensity"], 4) for s, v in point["per_seed"].items()}
        print(f"{key}: skew intensity {point['skew_intensity']:.4f} per seed {per_seed}")
    print(f"wrote {paths['rows']} and {paths['summary']}")


if __name__ == "__main__":
    main()

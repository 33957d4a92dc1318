"""Fit the order-book mixtures on synthetic L2 data and save the model JSON.

Point --data at a real L2 snapshot CSV (step,mid,bid_vol_*,ask_vol_*) to
calibrate on recorded data instead.
"""

import argparse

import numpy as np

from dealersim.ecnmodel import SynthConfig, calibrate, read_l2_csv, synth_l2_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default=None, help="L2 snapshot CSV; default: synthesize")
    ap.add_argument("--steps", type=int, default=2000, help="synthetic steps")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/model.json")
    args = ap.parse_args()

    if args.data is not None:
        rows = read_l2_csv(args.data)
    else:
        cfg = SynthConfig(n_steps=args.steps)
        rows = synth_l2_dataset(cfg, np.random.default_rng(args.seed))

    model = calibrate(rows, seed=args.seed)
    for name, trace in model.fit_traces.items():
        print(f"{name}: ll {trace[0]:.4f} -> {trace[-1]:.4f} in {len(trace)} EM steps")
    model.save(args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()

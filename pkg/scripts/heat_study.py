#!/usr/bin/env python3
"""Train the nano model on heat trajectories, then probe resolution transfer.

Runs two checks end to end on one CPU core:
  1. Desk-scale training: the nano model trained on 500 heat trajectories
     must reach one-step L2RE <= 0.05 on 50 held-out trajectories, and the
     copy-last-frame baseline must score worse than the model.
  2. Resolution generalization: the same 32-trained model evaluated on the
     same fields resampled to 48 and 64 must degrade by at most 50%
     relative to its 32 error.

Exit status is 0 when both checks pass, 1 otherwise.
"""

import argparse
import csv
import sys

from dpot.train import heat_training_study, resolution_study


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=4000, help="training steps")
    parser.add_argument("--n-train", type=int, default=500, help="training trajectories")
    parser.add_argument("--n-eval", type=int, default=50, help="held-out trajectories")
    parser.add_argument("--csv", default="", help="optional path for a results CSV")
    args = parser.parse_args(argv)

    study = heat_training_study(
        n_train=args.n_train,
        n_eval=args.n_eval,
        steps=args.steps,
        log=print,
    )
    ok_train = study["l2re"] <= 0.05 and study["baseline"] > study["l2re"]
    print(
        f"training check: {'PASS' if ok_train else 'FAIL'} "
        f"(one-step L2RE {study['l2re']:.4f} vs threshold 0.05, "
        f"baseline {study['baseline']:.4f}, {study['seconds']:.0f}s)"
    )

    res = resolution_study(study["model"], log=print)
    ok_res = res["max_degradation"] <= 0.5
    print(
        f"resolution check: {'PASS' if ok_res else 'FAIL'} "
        f"(worst degradation {100 * res['max_degradation']:.1f}% vs limit 50%, "
        f"{res['seconds']:.0f}s)"
    )

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["check", "quantity", "value"])
            writer.writerow(["training", "l2re_onestep", study["l2re"]])
            writer.writerow(["training", "l2re_baseline", study["baseline"]])
            for H, err in res["errors"].items():
                writer.writerow(["resolution", f"l2re_at_{H}", err])
        print(f"wrote {args.csv}")

    return 0 if (ok_train and ok_res) else 1


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Sweep training noise and compare transfer against scratch on vorticity data.

Runs two checks end to end on one CPU core:
  1. Noise-injection trend: over five seeds, the best mean 10-step rollout
     L2RE among training noise levels {5e-5, 5e-4} must not exceed the
     zero-noise mean, and level 5e-2 must be strictly worse than zero.
  2. Transfer utility: a model pretrained on heat plus diffusion-reaction
     data, then fine-tuned on 64 vorticity trajectories, must match or beat
     a from-scratch model with the same step budget on at least 4 of 5
     seeds, scored by 10-step rollout L2RE.

The noise sweep trains 20 models and takes the bulk of the runtime (about
an hour on one core). Exit status is 0 when both checks pass, 1 otherwise.
"""

import argparse
import csv
import sys

from dpot.train import noise_study, transfer_study


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=2500, help="noise-sweep training steps")
    parser.add_argument("--skip-noise", action="store_true", help="run only the transfer check")
    parser.add_argument("--skip-transfer", action="store_true", help="run only the noise check")
    parser.add_argument("--csv", default="", help="optional path for a results CSV")
    args = parser.parse_args(argv)
    rows = []
    ok_noise = ok_transfer = True

    if not args.skip_noise:
        noise = noise_study(steps=args.steps, log=print)
        means = {eps: arm["mean"] for eps, arm in noise["per_eps"].items()}
        best_small = min(means[5e-5], means[5e-4])
        ok_noise = best_small <= means[0.0] and means[5e-2] > means[0.0]
        print(
            f"noise check: {'PASS' if ok_noise else 'FAIL'} "
            f"(means: eps0 {means[0.0]:.4f}, best small {best_small:.4f}, "
            f"eps5e-2 {means[5e-2]:.4f}, {noise['seconds']:.0f}s)"
        )
        for eps, arm in noise["per_eps"].items():
            for seed, val in zip(noise["seeds"], arm["per_seed"]):
                rows.append(["noise", f"eps_{eps:g}_seed_{seed}", val])

    if not args.skip_transfer:
        transfer = transfer_study(log=print)
        ok_transfer = transfer["wins"] >= 4
        print(
            f"transfer check: {'PASS' if ok_transfer else 'FAIL'} "
            f"({transfer['wins']}/5 seeds with transfer <= scratch, "
            f"{transfer['seconds']:.0f}s)"
        )
        for entry in transfer["per_seed"]:
            rows.append(["transfer", f"seed_{entry['seed']}_transfer", entry["transfer"]])
            rows.append(["transfer", f"seed_{entry['seed']}_scratch", entry["scratch"]])

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["check", "quantity", "value"])
            writer.writerows(rows)
        print(f"wrote {args.csv}")

    return 0 if (ok_noise and ok_transfer) else 1


if __name__ == "__main__":
    sys.exit(main())

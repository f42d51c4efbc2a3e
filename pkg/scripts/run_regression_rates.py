#!/usr/bin/env python3
"""Desk-scale regression-rate study: fit theory-scheduled estimators over a
dyadic grid of sample sizes and compare fitted risk slopes with the predicted
exponents."""

import argparse

from ridgeline.regression_lab import predict_rate, run_regression_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-list", type=lambda s: [int(t) for t in s.split(",")],
                    default=[128, 256, 512, 1024, 2048])
    ap.add_argument("--trials", type=int, default=8)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    combos = [("shallow", "holder"), ("shallow", "variation"),
              ("overparam", "variation")]
    print(f"{'family':>10} {'class':>10} {'slope':>8} {'stderr':>8} "
          f"{'predicted':>10}")
    for family, class_tag in combos:
        alpha = args.alpha if class_tag == "holder" else None
        table = run_regression_sweep(family, class_tag, d=1, alpha=alpha,
                                     n_list=args.n_list, trials=args.trials,
                                     seed=args.seed, threads=args.threads)
        predicted = -float(predict_rate(family, class_tag, 1, alpha))
        print(f"{family:>10} {class_tag:>10} {table.meta['slope']:>8.3f} "
              f"{table.meta['slope_stderr']:>8.3f} {predicted:>10.3f}")


if __name__ == "__main__":
    main()

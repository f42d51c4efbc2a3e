#!/usr/bin/env python3
"""Trade-off between projection error and variation mass as the smoothing
degree m grows: sup error falls like 1/m while the l2 variation rises like m,
so error scales like 1/gamma."""

import argparse

import numpy as np

from ridgeline.kernelize import build_density, projection_on_ball, variation_estimate
from ridgeline.lift import lift_to_sphere, make_target
from ridgeline.network import sup_error
from ridgeline.rates import fit_slope


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m-list", type=lambda s: [int(t) for t in s.split(",")],
                    default=[4, 6, 8, 12, 16, 24, 32, 48, 64])
    ap.add_argument("--target", default="weierstrass",
                    help="rough targets show the predicted trade-off; smooth "
                         "ones converge faster")
    ap.add_argument("--alpha", type=float, default=1.0)
    args = ap.parse_args()

    target = make_target(args.target, d=1, alpha=args.alpha)
    lifted = lift_to_sphere(target, k=1)
    m_vals = np.array(args.m_list, dtype=float)
    errs, gammas = [], []
    print(f"{'m':>4} {'sup_error':>14} {'gamma_l2':>14}")
    for m in args.m_list:
        density = build_density(lifted, k=1, m=m)
        err = sup_error(projection_on_ball(density), target, d=1)
        gamma_l2, _ = variation_estimate(density)
        errs.append(err)
        gammas.append(gamma_l2)
        print(f"{m:>4} {err:>14.6e} {gamma_l2:>14.6e}")

    errs, gammas = np.array(errs), np.array(gammas)
    for label, x, y, want in (("error vs m", m_vals, errs, -1.0),
                              ("gamma_l2 vs m", m_vals, gammas, +1.0),
                              ("error vs gamma", gammas, errs, -1.0)):
        slope, stderr = fit_slope(x, y)
        print(f"{label:>16}: slope {slope:+.3f} (stderr {stderr:.3f}, "
              f"predicted {want:+.1f})")


if __name__ == "__main__":
    main()

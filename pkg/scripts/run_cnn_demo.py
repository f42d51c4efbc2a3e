#!/usr/bin/env python3
"""Compile a random shallow ReLU network into an exactly equivalent sparse
deep CNN and report the structural bookkeeping."""

import argparse

import numpy as np

from ridgeline.cnn_compiler import (kappa_norm, min_depth, shallow_to_cnn,
                                    shallow_to_generic, verify_equivalence)
from ridgeline.network import ShallowNet


def random_shallow(n_units: int, d: int, seed: int) -> ShallowNet:
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n_units, d + 1))
    v = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    return ShallowNet(k=1, d=d, a=rng.standard_normal(n_units), v=v)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-units", type=int, default=4)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--s", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    net = random_shallow(args.n_units, args.d, args.seed)
    depth = min_depth(args.n_units, args.d, args.s)
    cnn = shallow_to_cnn(net, s=args.s)
    report = verify_equivalence(net, cnn, n_points=500, seed=args.seed)

    print(f"shallow: N={args.n_units}, d={args.d}  ->  CNN: s={args.s}, "
          f"L={cnn.L} (minimum {depth})")
    print(f"layer widths: {cnn.widths}")
    print(f"parameter count: {cnn.param_count} "
          f"(formula (5s+2)L+2d-2s = {(5 * args.s + 2) * cnn.L + 2 * args.d - 2 * args.s})")
    print(f"kappa(shallow) = {kappa_norm(shallow_to_generic(net)):.6f}, "
          f"variation = {net.variation:.6f}")
    print(f"equivalence over {report.n_points} points: max gap "
          f"{report.max_gap:.3e}, mean gap {report.mean_gap:.3e}, "
          f"passed = {report.passed}")


if __name__ == "__main__":
    main()

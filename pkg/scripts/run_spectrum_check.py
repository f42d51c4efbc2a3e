#!/usr/bin/env python3
"""Cross-check the activation spectrum: closed form vs Gauss-Jacobi quadrature,
and print the structural zero pattern for small k, d."""

import argparse

import numpy as np

from ridgeline.harmonics import (ActivationSpectrum, jacobi_nodes,
                                 sigma_hat_closed, sigma_hat_quad)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--nmax", type=int, default=20)
    args = ap.parse_args()

    quad = jacobi_nodes(args.d, args.nmax + args.k + 16)
    spectrum = ActivationSpectrum.build(args.k, args.d, args.nmax)
    worst = 0.0
    print(f"sigma_hat for k={args.k}, d={args.d}")
    print(f"{'n':>4} {'closed':>24} {'quad':>24} {'diff':>12}  zero")
    for n in range(args.nmax + 1):
        quad_val = sigma_hat_quad(args.k, args.d, n, quad)
        is_zero = spectrum.is_zero(n)
        if 1 <= n <= args.k:
            print(f"{n:>4} {'(quadrature only)':>24} {quad_val:>24.16e} "
                  f"{'':>12}  {is_zero}")
            continue
        closed = float(sigma_hat_closed(args.k, args.d, n))
        diff = abs(closed - quad_val)
        worst = max(worst, diff)
        print(f"{n:>4} {closed:>24.16e} {quad_val:>24.16e} {diff:>12.3e}  "
              f"{is_zero}")
    print(f"\nworst closed-vs-quadrature gap: {worst:.3e}")
    zeros = [n for n in range(args.nmax + 1) if spectrum.is_zero(n)]
    print(f"structural zeros (expect n >= {args.k + 1} with n = {args.k} "
          f"mod 2): {zeros}")


if __name__ == "__main__":
    main()

"""Finite shallow ReLU^k networks: evaluation, Monte-Carlo discretization of a
ridge density, and sup-norm rate sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.stats import qmc

from .errors import NumericalError
from .harmonics import sigma_k
from .kernelize import RidgeDensity, build_density, eval_phi, projection_on_ball, variation_estimate
from .lift import TargetFunction, as_points, ball_grid, lift_to_sphere
from .rates import RateTable

ENVELOPE_PAD = 1.2
MAX_ENVELOPE_RESTARTS = 6


@dataclass(frozen=True, eq=False)
class ShallowNet:
    """sum_i a_i sigma_k((x^T,1) v_i) with unit ridge directions v_i in S^d."""

    k: int
    d: int
    a: np.ndarray
    v: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if a.ndim != 1 or v.ndim != 2 or v.shape != (a.size, self.d + 1):
            raise ValueError(f"weight shapes {a.shape}, {v.shape} do not describe "
                             f"units in S^{self.d}")
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(v)):
            raise ValueError("non-finite network weights")
        if a.size and np.max(np.abs(np.linalg.norm(v, axis=1) - 1.0)) > 1e-12:
            raise ValueError("ridge directions must be unit vectors")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "v", v)

    @property
    def n_units(self) -> int:
        return self.a.size

    @property
    def variation(self) -> float:
        """Outer-weight l1 norm, the variation budget the net consumes."""
        return float(np.sum(np.abs(self.a)))


def eval_shallow(net: ShallowNet, x: np.ndarray) -> np.ndarray:
    """Evaluate the net on points of the unit ball."""
    x = as_points(x, net.d)
    if x.size and np.max(np.linalg.norm(x, axis=1)) > 1.0 + 1e-9:
        raise ValueError("shallow nets are defined on the unit ball")
    if net.n_units == 0:
        return np.zeros(x.shape[0])
    z = x @ net.v[:, :net.d].T + net.v[:, net.d]
    return sigma_k(z, net.k) @ net.a


def mc_deviation_bound(k: int, n_terms: int) -> float:
    """Expected sup-deviation bound k 2^{k/2+1}/sqrt(N) for a unit-variation
    Monte-Carlo discretization (k >= 1; the Heaviside case is not Lipschitz)."""
    if k < 1:
        raise ValueError(f"bound requires k >= 1, got {k}")
    if n_terms < 1:
        raise ValueError(f"need n_terms >= 1, got {n_terms}")
    return k * 2.0 ** (k / 2.0 + 1.0) / math.sqrt(n_terms)


def discretize_mc(density: RidgeDensity, n_terms: int, seed: int = 0) -> ShallowNet:
    """Draw an N-unit net from a ridge density by sign-split rejection sampling.

    Directions are i.i.d. from |phi|/||phi||_1 (uniform sphere proposal,
    envelope 1.2x the grid maximum of |phi|, inflated x2 on violation up to
    6 restarts); outer weights are sign(phi(v_i)) ||phi||_1 / N, so the net's
    variation equals the density's l1 mass.
    """
    if n_terms < 1:
        raise ValueError(f"need n_terms >= 1, got {n_terms}")
    _, gamma_l1 = variation_estimate(density)
    grid_max = float(np.max(np.abs(density.phi_values))) if density.phi_values.size else 0.0
    if gamma_l1 <= 0.0 or grid_max <= 0.0:
        raise ValueError("cannot discretize a zero density")
    dim = density.d + 1
    rng = np.random.default_rng(seed)
    envelope = ENVELOPE_PAD * grid_max
    for _ in range(MAX_ENVELOPE_RESTARTS + 1):
        dirs = np.empty((0, dim))
        signs = np.empty(0)
        violated = False
        while dirs.shape[0] < n_terms:
            batch = max(256, 4 * (n_terms - dirs.shape[0]))
            z = rng.standard_normal((batch, dim))
            z /= np.linalg.norm(z, axis=1, keepdims=True)
            vals = eval_phi(density, z)
            if np.max(np.abs(vals)) > envelope:
                violated = True
                break
            keep = rng.uniform(0.0, envelope, size=batch) < np.abs(vals)
            dirs = np.concatenate([dirs, z[keep]])
            signs = np.concatenate([signs, np.sign(vals[keep])])
        if not violated:
            break
        envelope *= 2.0
    else:
        raise NumericalError("rejection envelope violated even after "
                             f"{MAX_ENVELOPE_RESTARTS} inflations")
    dirs = dirs[:n_terms]
    signs = signs[:n_terms]
    return ShallowNet(k=density.k, d=density.d, a=signs * (gamma_l1 / n_terms),
                      v=dirs, seed=seed)


def ball_test_grid(d: int) -> np.ndarray:
    """Fixed measurement grid: 2001 uniform points for d=1, 4096 Halton
    points mapped area-uniformly onto the disk for d=2."""
    if d == 1:
        return np.linspace(-1.0, 1.0, 2001)[:, None]
    if d == 2:
        u = qmc.Halton(2, scramble=False).random(4096)
        r = np.sqrt(u[:, 0])
        ang = 2.0 * np.pi * u[:, 1]
        return np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
    raise ValueError(f"measurement grids are defined for d in {{1, 2}}, got {d}")


def sup_error(f: Callable[[np.ndarray], np.ndarray],
              g: Callable[[np.ndarray], np.ndarray], d: int) -> float:
    grid = ball_test_grid(d)
    return float(np.max(np.abs(np.asarray(f(grid), dtype=float)
                               - np.asarray(g(grid), dtype=float))))


@dataclass(frozen=True)
class ErrorReport:
    """Sup-norm error on the fixed grid plus a Monte-Carlo L2 estimate."""

    sup_error: float
    l2_error: float
    l2_stderr: float
    grid_points: int
    mc_points: int
    seed: int


def error_report(f: Callable[[np.ndarray], np.ndarray],
                 g: Callable[[np.ndarray], np.ndarray], d: int,
                 seed: int = 0, mc_points: int = 4096) -> ErrorReport:
    sup = sup_error(f, g, d)
    x = ball_grid(d, mc_points, seed=seed)
    sq = (np.asarray(f(x), dtype=float) - np.asarray(g(x), dtype=float)) ** 2
    mean_sq = float(np.mean(sq))
    l2 = math.sqrt(mean_sq)
    # delta method: stderr of sqrt(mean) = stderr(mean) / (2 sqrt(mean))
    se_mean = float(np.std(sq, ddof=1)) / math.sqrt(mc_points)
    stderr = se_mean / (2.0 * l2) if l2 > 0.0 else 0.0
    return ErrorReport(sup_error=sup, l2_error=l2, l2_stderr=stderr,
                       grid_points=len(ball_test_grid(d)), mc_points=mc_points,
                       seed=seed)


def balanced_units(gamma_l2: float, d: int, k: int, alpha: float) -> int:
    """Unit count N = ceil(gamma_l2^{2d/(d+2k+1-2alpha)}) balancing the
    variation budget against the Monte-Carlo budget."""
    if not (0.0 < alpha < (d + 2 * k + 1) / 2.0):
        raise ValueError(f"balancing needs 0 < alpha < (d+2k+1)/2, got alpha={alpha}")
    expo = 2.0 * d / (d + 2 * k + 1 - 2.0 * alpha)
    return max(1, math.ceil(max(gamma_l2, 1e-300) ** expo))


def _one_trial(density: RidgeDensity, n_terms: int, target, d: int, seed: int) -> float:
    net = discretize_mc(density, n_terms, seed=seed)
    return sup_error(lambda pts: eval_shallow(net, pts), target, d)


def sweep_approx(target: TargetFunction, k: int, d: int,
                 schedule: Sequence[Union[int, tuple[int, int]]],
                 trials: int = 20, seed: int = 0, threads: int = 1) -> RateTable:
    """Rate sweep over smoothing levels m: build the density, discretize with
    the balanced unit count (or an explicit (m, N) override), and record
    sup errors averaged over trials.
    """
    pairs = []
    for entry in schedule:
        if isinstance(entry, tuple):
            pairs.append((int(entry[0]), int(entry[1])))
        else:
            pairs.append((int(entry), 0))
    needs_alpha = any(n == 0 for _, n in pairs)
    alpha = target.alpha if isinstance(target, TargetFunction) else None
    if needs_alpha and (alpha is None or not math.isfinite(alpha)):
        raise ValueError("balanced schedules need a target with finite alpha")

    h_tilde = lift_to_sphere(target, k=k, d=d)
    table = RateTable(("m", "N", "M", "sup_err_mean", "sup_err_std"),
                      meta={"k": k, "d": d, "alpha": alpha, "trials": trials,
                            "seed": seed})
    for idx, (m, n_forced) in enumerate(pairs):
        density = build_density(h_tilde, k=k, m=m)
        g2, g1 = variation_estimate(density)
        n_terms = n_forced if n_forced else balanced_units(g2, d, k, alpha)
        seeds = [int(np.random.SeedSequence(entropy=seed, spawn_key=(idx, t))
                     .generate_state(1)[0]) for t in range(trials)]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                errs = list(pool.map(
                    lambda s: _one_trial(density, n_terms, target, d, s), seeds))
        else:
            errs = [_one_trial(density, n_terms, target, d, s) for s in seeds]
        errs = np.array(errs)
        table.add_row(m, n_terms, g1, float(np.mean(errs)),
                      float(np.std(errs, ddof=1)) if trials > 1 else 0.0)
    table.meta["slope_err_vs_N"] = table.slope("N", "sup_err_mean")
    table.meta["slope_err_vs_M"] = table.slope("M", "sup_err_mean")
    return table

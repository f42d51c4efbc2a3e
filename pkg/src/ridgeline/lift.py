"""Lifting targets on the unit ball to functions on the sphere, and back.

A function h on B^d is carried to h_tilde(u) = chi(u_{d+1}) u_{d+1}^k h(u'/u_{d+1})
on S^d, smoothly cut off outside the cap u_{d+1} >= 1/sqrt(2) and extended to the
lower hemisphere with the antipodal parity that kills the structurally-zero
activation degrees (odd extension for even k, even extension for odd k).  The
lowering operator S_k g(x) = (|x|^2+1)^{k/2} g((x,1)/sqrt(|x|^2+1)) inverts the
lift exactly on the ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "BumpProfile",
    "SphereFunction",
    "TargetFunction",
    "lift_to_sphere",
    "apply_lowering",
    "parity_for_k",
    "make_target",
    "TARGET_NAMES",
    "estimate_holder_norm",
    "ball_grid",
]

#: arguments passed to the target never exceed this radius: sqrt(1 - w^2)/w at
#: the inner cutoff w = 1/(2 sqrt 2) equals sqrt 7.
SUPPORT_RADIUS = math.sqrt(7.0)

LOWER_CUT = 1.0 / (2.0 * math.sqrt(2.0))
UPPER_CUT = 1.0 / math.sqrt(2.0)


def _psi(s: np.ndarray) -> np.ndarray:
    """exp(-1/s) for s > 0, zero otherwise; the standard smooth glue."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.zeros_like(s)
    pos = s > 0
    with np.errstate(over="ignore", under="ignore"):
        out[pos] = np.exp(-1.0 / s[pos])
    return out


def as_points(x: np.ndarray, dim: int) -> np.ndarray:
    """Coerce input to an (n, dim) point array; 1-d input is n points when dim == 1."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None] if dim == 1 else x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class BumpProfile:
    """Smooth step: 0 below `lower`, 1 above `upper`, C-infinity in between."""

    lower: float = LOWER_CUT
    upper: float = UPPER_CUT

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"need lower < upper, got {self.lower} >= {self.upper}")

    def __call__(self, t: np.ndarray | float) -> np.ndarray | float:
        t_in = np.asarray(t, dtype=float)
        t1 = np.atleast_1d(t_in)
        out = np.ones_like(t1)
        out[t1 <= self.lower] = 0.0
        mid = (t1 > self.lower) & (t1 < self.upper)
        if np.any(mid):
            rise = _psi(t1[mid] - self.lower)
            fall = _psi(self.upper - t1[mid])
            out[mid] = rise / (rise + fall)
        return out.reshape(t_in.shape) if t_in.shape else float(out[0])


def parity_for_k(k: int) -> str:
    """Antipodal parity of the lift: odd for even k, even for odd k."""
    return "odd" if k % 2 == 0 else "even"


@dataclass(frozen=True)
class SphereFunction:
    """A function on S^d with a declared antipodal parity ('odd', 'even', 'none')."""

    d: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    parity: str = "none"

    def __post_init__(self):
        if self.parity not in ("odd", "even", "none"):
            raise ValueError(f"unknown parity {self.parity!r}")

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = as_points(u, self.d + 1)
        return np.asarray(self.evaluator(u), dtype=float)


@dataclass(frozen=True)
class TargetFunction:
    """A target h on the ball: callable on points of radius up to sqrt(7).

    `alpha` is the smoothness order (math.inf for C-infinity targets, None for
    targets classified by variation norm rather than smoothness);
    `norm_scale` is the grid-estimated Hoelder norm divided out so the scaled
    target sits in the unit smoothness ball; class_tag is 'holder',
    'variation', or 'smooth'.
    """

    name: str
    d: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    alpha: Optional[float]
    norm_scale: float = 1.0
    class_tag: str = "holder"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = as_points(x, self.d)
        radii = np.linalg.norm(x, axis=-1)
        if np.any(radii > SUPPORT_RADIUS + 1e-9):
            raise ValueError("target evaluated outside its radius-sqrt(7) domain")
        return np.asarray(self.evaluator(x), dtype=float) / self.norm_scale


def lift_to_sphere(target: TargetFunction | Callable[[np.ndarray], np.ndarray],
                   k: int,
                   d: Optional[int] = None,
                   bump: BumpProfile = BumpProfile()) -> SphereFunction:
    """Lift a ball function to S^d with degree-k homogeneity and the parity for k."""
    if isinstance(target, TargetFunction):
        h, dim = target, target.d
    else:
        if d is None:
            raise ValueError("d is required when lifting a bare callable")
        h, dim = target, d
    parity = parity_for_k(k)
    eps = -1.0 if parity == "odd" else 1.0

    def evaluator(u: np.ndarray) -> np.ndarray:
        u = as_points(u, dim + 1)
        last = u[:, -1]
        w = np.abs(last)
        chi = np.asarray(bump(w), dtype=float)
        vals = np.zeros(u.shape[0])
        live = chi > 0.0
        if np.any(live):
            # x = u'/u_{d+1} handles both hemispheres: for u_{d+1} < 0 it equals
            # the argument of the antipodal image.
            x = u[live, :-1] / last[live, None]
            vals[live] = chi[live] * w[live] ** k * np.asarray(h(x), dtype=float)
            flip = live & (last < 0)
            vals[flip] *= eps
        return vals

    return SphereFunction(d=dim, evaluator=evaluator, parity=parity)


def apply_lowering(g: SphereFunction | Callable[[np.ndarray], np.ndarray],
                   k: int,
                   x: np.ndarray) -> np.ndarray:
    """S_k g(x) = (|x|^2 + 1)^{k/2} g((x, 1)/sqrt(|x|^2 + 1)) for x in the unit ball."""
    if isinstance(g, SphereFunction):
        x = as_points(x, g.d)
    else:
        x = np.atleast_2d(np.asarray(x, dtype=float))
    sq = np.sum(x * x, axis=-1)
    if np.any(sq > 1.0 + 1e-9):
        raise ValueError("lowering is defined on the unit ball only")
    scale = np.sqrt(sq + 1.0)
    u = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1) / scale[:, None]
    return scale**k * np.asarray(g(u), dtype=float)


# ---------------------------------------------------------------------------
# Target catalog.
# ---------------------------------------------------------------------------

TARGET_NAMES = ("holder_profile", "abs", "gauss_bump", "random_shallow", "weierstrass")


def ball_grid(d: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic points filling the unit ball (uniform in volume)."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = rng.uniform(0.0, 1.0, size=count) ** (1.0 / d)
    return z * r[:, None]


def estimate_holder_norm(f: Callable[[np.ndarray], np.ndarray], d: int, alpha: float,
                         seed: int = 0, points: int = 2048) -> float:
    """Grid estimate of max(sup |f|, Hoelder-alpha seminorm) on the unit ball."""
    rng = np.random.default_rng(seed)
    x = ball_grid(d, points, seed=seed)
    fx = np.asarray(f(x), dtype=float)
    sup = float(np.max(np.abs(fx)))
    semi = 0.0
    # pair points at several separation scales; nearby pairs probe fine roughness
    for scale in (1.0, 0.3, 0.1, 0.03, 0.01, 0.003):
        step = rng.standard_normal((points, d))
        step *= scale / np.linalg.norm(step, axis=1, keepdims=True)
        y = x + step
        ok = np.linalg.norm(y, axis=1) <= 1.0
        if not np.any(ok):
            continue
        fy = np.asarray(f(y[ok]), dtype=float)
        gaps = np.abs(fy - fx[ok]) / scale**alpha
        semi = max(semi, float(np.max(gaps)))
    return max(sup, semi)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def make_target(name: str, d: int, alpha: float = 1.0, seed: int = 0) -> TargetFunction:
    """Build a catalog target on B^d, rescaled into the unit smoothness ball."""
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    if name == "abs":
        def raw(x):
            return np.abs(x[:, 0])
        scale = estimate_holder_norm(raw, d, 1.0, seed=seed)
        return TargetFunction(name=name, d=d, evaluator=raw, alpha=1.0,
                              norm_scale=scale, class_tag="holder")
    if name == "holder_profile":
        if alpha <= 0:
            raise ValueError(f"need alpha > 0, got {alpha}")
        w = _unit(np.linspace(1.0, 0.5, d))
        b = 0.3

        def raw(x):
            z = x @ w + b
            return np.where(z > 0.0, z, 0.0) ** alpha

        scale = estimate_holder_norm(raw, d, min(alpha, 1.0), seed=seed)
        return TargetFunction(name=name, d=d, evaluator=raw, alpha=alpha,
                              norm_scale=scale, class_tag="holder")
    if name == "gauss_bump":
        def raw(x):
            return np.exp(-np.sum(x * x, axis=-1))
        return TargetFunction(name=name, d=d, evaluator=raw, alpha=math.inf,
                              norm_scale=1.0, class_tag="smooth")
    if name == "random_shallow":
        rng = np.random.default_rng(seed)
        units = 8
        v = rng.standard_normal((units, d + 1))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        a = rng.dirichlet(np.ones(units)) * rng.choice([-1.0, 1.0], size=units)

        def raw(x):
            xa = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
            z = xa @ v.T
            return np.where(z > 0.0, z, 0.0) @ a

        return TargetFunction(name=name, d=d, evaluator=raw, alpha=None,
                              norm_scale=1.0, class_tag="variation")
    if name == "weierstrass":
        if alpha <= 0:
            raise ValueError(f"need alpha > 0, got {alpha}")
        lam = 2.0
        levels = 20
        golden = (math.sqrt(5.0) - 1.0) / 2.0
        phases = 2.0 * math.pi * ((np.arange(levels) * golden + 0.123) % 1.0)
        freqs = lam ** np.arange(levels)
        amps = lam ** (-alpha * np.arange(levels))
        w = _unit(np.linspace(1.0, 0.5, d))

        def raw(x):
            z = x @ w
            # analytic envelope: keeps each rung's spectrum free of slow window
            # sidelobes, which would otherwise swamp high-degree energy sums
            return np.exp(-(z / 0.4) ** 2) * (np.cos(np.outer(z, freqs) + phases) @ amps)

        scale = estimate_holder_norm(raw, d, min(alpha, 1.0), seed=seed)
        return TargetFunction(name=name, d=d, evaluator=raw, alpha=alpha,
                              norm_scale=scale, class_tag="holder")
    raise ValueError(f"unknown target {name!r}; choose from {TARGET_NAMES}")

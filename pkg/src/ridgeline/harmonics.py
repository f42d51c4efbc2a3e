"""Spherical-harmonic machinery on S^d.

Provides surface areas, harmonic-space dimensions, normalized Gegenbauer
kernels, Gauss-Jacobi quadrature for the projected measure on [-1, 1], and
the Gegenbauer spectrum of the truncated-power activation sigma_k(t) =
max(0, t)^k.  Everything downstream (kernel synthesis, variation estimates,
rate predictions) reduces to these primitives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NumericalError

__all__ = [
    "surface_area",
    "harmonic_dim",
    "GegenbauerTable",
    "gegenbauer_eval",
    "gegenbauer_series",
    "JacobiQuadrature",
    "jacobi_nodes",
    "ZeroTag",
    "sigma_hat_closed",
    "sigma_hat_quad",
    "ActivationSpectrum",
    "sigma_k",
]


def surface_area(j: int) -> float:
    """Surface area of the unit sphere S^j in R^{j+1}: 2 pi^{(j+1)/2} / Gamma((j+1)/2)."""
    if j < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {j}")
    half = (j + 1) / 2.0
    return math.exp(math.log(2.0) + half * math.log(math.pi) - math.lgamma(half))


def harmonic_dim(d: int, n: int) -> int:
    """Dimension of the degree-n spherical-harmonic space on S^d, exact integer."""
    if d < 1 or n < 0:
        raise ValueError(f"need d >= 1 and n >= 0, got d={d}, n={n}")
    if n == 0:
        return 1
    # (2n+d-1)/n * C(n+d-2, d-1); the product is always divisible by n.
    return (2 * n + d - 1) * math.comb(n + d - 2, d - 1) // n


def _project_norm_constant(d: int) -> float:
    """c_d = omega_{d-1}/omega_d, the density normalizer of the projected measure."""
    return math.exp(
        math.lgamma((d + 1) / 2.0) - math.lgamma(d / 2.0) - 0.5 * math.log(math.pi)
    )


def sigma_k(t: np.ndarray | float, k: int) -> np.ndarray | float:
    """Truncated power sigma_k(t) = max(0, t)^k, with sigma_0(0) := 0."""
    t = np.asarray(t, dtype=float)
    if k == 0:
        out = (t > 0.0).astype(float)
    else:
        out = np.where(t > 0.0, t, 0.0) ** k
    return out if out.shape else float(out)


# ---------------------------------------------------------------------------
# Gegenbauer kernels, normalized so that P_n(1) = 1.
# ---------------------------------------------------------------------------


def gegenbauer_eval(d: int, n: int, t: float) -> float:
    """Normalized Gegenbauer polynomial P_n(t) on S^d with P_n(1) = 1.

    Upward three-term recurrence on the ultraspherical family with index
    lambda = (d-1)/2, normalized at the end by the value at t = 1.  The d = 1
    case degenerates (lambda = 0) and uses P_n(cos theta) = cos(n theta).
    """
    if d < 1 or n < 0:
        raise ValueError(f"need d >= 1 and n >= 0, got d={d}, n={n}")
    if abs(t) > 1.0 + 1e-12:
        raise ValueError(f"argument outside [-1, 1]: t={t}")
    t = min(1.0, max(-1.0, t))
    if d == 1:
        return math.cos(n * math.acos(t))
    if n == 0:
        return 1.0
    lam = (d - 1) / 2.0
    c_prev, c_curr = 1.0, 2.0 * lam * t
    e_prev, e_curr = 1.0, 2.0 * lam  # same recurrence evaluated at t = 1
    for j in range(2, n + 1):
        c_prev, c_curr = c_curr, (2.0 * (j + lam - 1.0) * t * c_curr - (j + 2.0 * lam - 2.0) * c_prev) / j
        e_prev, e_curr = e_curr, (2.0 * (j + lam - 1.0) * e_curr - (j + 2.0 * lam - 2.0) * e_prev) / j
    return c_curr / e_curr


def gegenbauer_series(d: int, coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Accumulate sum_n coeffs[n] * P_n(t) in a single upward recurrence pass.

    The normalized recurrence (n+d-1) P_{n+1} = (2n+d-1) t P_n - n P_{n-1}
    holds for every d >= 1 (d = 1 reduces to the Chebyshev recurrence) and
    keeps |P_n| <= 1, so forward accumulation is stable.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    t = np.asarray(t, dtype=float)
    acc = np.full(t.shape, coeffs[0], dtype=float) if coeffs.size else np.zeros(t.shape)
    if coeffs.size <= 1:
        return acc
    p_prev = np.ones_like(t)
    p_curr = t.copy()
    acc = acc + coeffs[1] * p_curr
    for n in range(1, coeffs.size - 1):
        p_prev, p_curr = p_curr, ((2 * n + d - 1) * t * p_curr - n * p_prev) / (n + d - 1)
        acc += coeffs[n + 1] * p_curr
    return acc


@dataclass(frozen=True)
class GegenbauerTable:
    """Fixed-dimension evaluator for P_0 .. P_{n_max} on S^d."""

    d: int
    n_max: int

    def __post_init__(self):
        if self.d < 1 or self.n_max < 0:
            raise ValueError(f"need d >= 1 and n_max >= 0, got d={self.d}, n_max={self.n_max}")

    def eval_all(self, t: np.ndarray) -> np.ndarray:
        """Values P_n(t) for all n <= n_max, shape (n_max+1,) + t.shape."""
        t = np.asarray(t, dtype=float)
        out = np.empty((self.n_max + 1,) + t.shape, dtype=float)
        out[0] = 1.0
        if self.n_max >= 1:
            out[1] = t
        d = self.d
        for n in range(1, self.n_max):
            out[n + 1] = ((2 * n + d - 1) * t * out[n] - n * out[n - 1]) / (n + d - 1)
        return out

    def eval(self, n: int, t: float) -> float:
        if n > self.n_max:
            raise ValueError(f"degree {n} exceeds table bound {self.n_max}")
        return gegenbauer_eval(self.d, n, t)

    def series(self, coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.size > self.n_max + 1:
            raise ValueError(f"{coeffs.size} coefficients exceed table bound {self.n_max}")
        return gegenbauer_series(self.d, coeffs, t)


# ---------------------------------------------------------------------------
# Gauss-Jacobi quadrature via the symmetric-tridiagonal eigenvalue method.
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _gauss_jacobi(a: float, b: float, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss nodes/weights for weight (1-t)^a (1+t)^b on [-1, 1] (Golub-Welsch)."""
    if count < 1:
        raise ValueError(f"node count must be >= 1, got {count}")
    if a <= -1.0 or b <= -1.0:
        raise ValueError(f"weight exponents must exceed -1, got a={a}, b={b}")
    mu0 = math.exp(
        (a + b + 1.0) * math.log(2.0)
        + math.lgamma(a + 1.0)
        + math.lgamma(b + 1.0)
        - math.lgamma(a + b + 2.0)
    )
    diag = np.zeros(count)
    diag[0] = (b - a) / (a + b + 2.0)
    ks = np.arange(1, count, dtype=float)
    denom = (2.0 * ks + a + b) * (2.0 * ks + a + b + 2.0)
    with np.errstate(invalid="ignore"):
        diag[1:] = (b * b - a * a) / denom
    offdiag = np.zeros(count - 1)
    if count > 1:
        offdiag[0] = math.sqrt(
            4.0 * (a + 1.0) * (b + 1.0) / ((a + b + 2.0) ** 2 * (a + b + 3.0))
        )
    if count > 2:
        ks = np.arange(2.0, count)
        num = 4.0 * ks * (ks + a) * (ks + b) * (ks + a + b)
        den = (2.0 * ks + a + b) ** 2 * (2.0 * ks + a + b + 1.0) * (2.0 * ks + a + b - 1.0)
        offdiag[1:] = np.sqrt(num / den)
    try:
        vals, vecs = eigh_tridiagonal(diag, offdiag)
    except Exception as exc:  # pragma: no cover - LAPACK failure is exotic
        raise NumericalError(f"tridiagonal eigensolve failed: {exc}") from exc
    weights = mu0 * vecs[0, :] ** 2
    order = np.argsort(vals)
    return vals[order], weights[order]


@dataclass(frozen=True)
class JacobiQuadrature:
    """Gauss rule for integrals against (1-t^2)^{(d-2)/2} dt on [-1, 1].

    `weights` integrate against the raw weight function; `rho_weights`
    (= c_d * weights) integrate against the probability measure rho, so they
    sum to one.
    """

    d: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def rho_weights(self) -> np.ndarray:
        return _project_norm_constant(self.d) * self.weights

    def integrate(self, values: np.ndarray) -> float:
        """Integral of a function (sampled at the nodes) against the raw weight."""
        return float(np.dot(self.weights, values))


def jacobi_nodes(d: int, count: int) -> JacobiQuadrature:
    """Gauss nodes/weights for the weight (1-t^2)^{(d-2)/2} on [-1, 1]."""
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    e = (d - 2) / 2.0
    nodes, weights = _gauss_jacobi(e, e, count)
    return JacobiQuadrature(d=d, nodes=nodes.copy(), weights=weights.copy())


# ---------------------------------------------------------------------------
# Activation spectrum: Gegenbauer coefficients of sigma_k on S^d.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroTag:
    """Marks a spectrum entry that vanishes identically (not merely numerically)."""

    def __float__(self) -> float:
        return 0.0

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return "ZeroTag()"


def _is_structural_zero(k: int, n: int) -> bool:
    return n >= k + 1 and (n - k) % 2 == 0


def sigma_hat_closed(k: int, d: int, n: int) -> Union[float, ZeroTag]:
    """Closed-form Gegenbauer coefficient of sigma_k at degree n on S^d.

    Returns ZeroTag() exactly when n >= k+1 and n = k (mod 2).  Degrees
    1 <= n <= k have no closed form and are rejected; use sigma_hat_quad.
    All Gamma factors are combined in log space with the sign tracked
    separately, so large n stays finite.
    """
    if k < 0 or d < 1 or n < 0:
        raise ValueError(f"need k >= 0, d >= 1, n >= 0, got k={k}, d={d}, n={n}")
    log_cd = math.lgamma((d + 1) / 2.0) - math.lgamma(d / 2.0) - 0.5 * math.log(math.pi)
    if n == 0:
        log_val = (
            log_cd
            + math.lgamma(d / 2.0)
            + math.lgamma((k + 1) / 2.0)
            - math.log(2.0)
            - math.lgamma((k + d + 1) / 2.0)
        )
        return math.exp(log_val)
    if n <= k:
        raise ValueError(
            f"no closed form for 1 <= n <= k (n={n}, k={k}); use sigma_hat_quad"
        )
    if _is_structural_zero(k, n):
        return ZeroTag()
    # Now n >= k+1 with n+1 = k (mod 2).
    sign = -1.0 if ((n - k - 1) // 2) % 2 else 1.0
    log_val = (
        log_cd
        + math.lgamma(k + 1.0)
        - n * math.log(2.0)
        + math.lgamma(d / 2.0)
        + math.lgamma(float(n - k))
        - math.lgamma((n - k + 1) / 2.0)
        - math.lgamma((n + d + k + 1) / 2.0)
    )
    return sign * math.exp(log_val)


def sigma_hat_quad(k: int, d: int, n: int, quad: JacobiQuadrature) -> float:
    """Gegenbauer coefficient of sigma_k at degree n by Gauss quadrature.

    Computes c_d * int sigma_k(t) P_n(t) (1-t^2)^{(d-2)/2} dt as two
    sub-integrals split at the activation kink t = 0.  Each half gets its own
    affinely mapped Gauss-Jacobi rule whose weight exponent matches the
    (1 -+ t)^{(d-2)/2} singularity at the outer endpoint; the remaining
    (1 +- t)^{(d-2)/2} factor is smooth on the half and folded into the
    integrand, so convergence is spectral for every d >= 1.
    """
    if k < 0 or n < 0:
        raise ValueError(f"need k >= 0 and n >= 0, got k={k}, n={n}")
    if quad.d != d:
        raise ValueError(f"quadrature built for d={quad.d}, asked for d={d}")
    count = quad.nodes.size
    if count < n + k + 8:
        raise ValueError(f"node count {count} below required {n + k + 8}")
    e = (d - 2) / 2.0
    table = GegenbauerTable(d=d, n_max=n)

    def half(sign: float) -> float:
        # sign=+1: t in [0, 1], singular factor (1-t)^e; sign=-1: mirror.
        a, b = (e, 0.0) if sign > 0 else (0.0, e)
        u, w = _gauss_jacobi(a, b, count)
        t = sign * (1.0 + sign * u) / 2.0  # affine map of [-1,1] onto the half
        smooth = ((3.0 + sign * u) / 2.0) ** e  # leftover (1 + sign*t)^e factor
        pn = table.eval_all(t)[n]
        integrand = sigma_k(t, k) * pn * smooth
        return 0.5 ** (e + 1.0) * float(np.dot(w, integrand))

    value = half(+1.0) + half(-1.0)
    return _project_norm_constant(d) * value


@dataclass(frozen=True)
class ActivationSpectrum:
    """Spectrum sigma_hat_k(n) for n <= n_max, with structural zeros exact.

    Coefficients at degrees n >= k+1 with n = k (mod 2) are stored as exact
    0.0; degrees 1 <= n <= k come from quadrature (no closed form there);
    everything else from the closed form.
    """

    k: int
    d: int
    coeffs: np.ndarray

    @property
    def n_max(self) -> int:
        return self.coeffs.size - 1

    def is_zero(self, n: int) -> bool:
        return _is_structural_zero(self.k, n)

    def value(self, n: int) -> float:
        return float(self.coeffs[n])

    @classmethod
    def build(cls, k: int, d: int, n_max: int) -> "ActivationSpectrum":
        if n_max < 0:
            raise ValueError(f"need n_max >= 0, got {n_max}")
        coeffs = np.zeros(n_max + 1)
        quad = None
        if k >= 1 and n_max >= 1:
            quad = jacobi_nodes(d, min(n_max, k) + k + 16)
        for n in range(n_max + 1):
            if 1 <= n <= k:
                coeffs[n] = sigma_hat_quad(k, d, n, quad)
            else:
                val = sigma_hat_closed(k, d, n)
                coeffs[n] = 0.0 if isinstance(val, ZeroTag) else val
        if not np.all(np.isfinite(coeffs)):
            raise NumericalError("non-finite activation coefficient")
        return cls(k=k, d=d, coeffs=coeffs)

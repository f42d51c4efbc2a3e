"""Smoothed spherical projections and ridge densities.

A lifted target h̃ on S^d is smoothed into the polynomial g_m = h̃ ∗ L_m
by a C∞ spectral cutoff, and g_m is rewritten as a ridge integral
g_m = φ ∗ σ_k.  The density φ carries the variation estimates
(‖φ‖_{L²}, ‖φ‖_{L¹}) that drive the approximation-rate experiments.

Sphere quadrature is uniform angles on S¹ and a Gauss–Legendre × uniform
product rule on S²; both grids are antipodally symmetric so that the
discrete projections of a parity-correct h̃ vanish at the degrees where
the activation spectrum vanishes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParityError
from .harmonics import (
    ActivationSpectrum,
    gegenbauer_series,
    harmonic_dim,
    jacobi_nodes,
    sigma_k,
)
from .lift import BumpProfile, SphereFunction, apply_lowering, as_points

_ETA_BRIDGE = BumpProfile(lower=1.0, upper=2.0)

# Antipodal sample agreement and zero-degree energy leakage allowed before
# a parity contract violation is declared.
_PARITY_VALUE_TOL = 1e-8
_PARITY_ENERGY_TOL = 1e-12


def eta_cutoff(t):
    """C∞ spectral cutoff: 1 on [0,1], 0 on [2,∞), smooth bridge between."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0):
        raise ValueError("eta_cutoff is defined on [0, inf)")
    bridge = _ETA_BRIDGE(t)
    if np.isscalar(bridge) or np.ndim(bridge) == 0:
        return 1.0 - float(bridge)
    return 1.0 - bridge


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Antipodally symmetric quadrature grid for the normalized measure τ."""

    nodes: np.ndarray      # (Q, d+1) unit vectors
    weights: np.ndarray    # (Q,) positive, summing to 1
    antipode: np.ndarray   # (Q,) index of the (near-)antipodal node


def sphere_grid(d: int, quad_degree: int) -> SphereGrid:
    """Product quadrature on S^d exact for polynomials of degree quad_degree.

    d=1: uniform angles (even count, hence antipodally symmetric);
    d=2: Gauss–Legendre in the polar coordinate times uniform azimuth.
    """
    if d == 1:
        count = 2 * (quad_degree // 2) + 2
        theta = 2.0 * np.pi * np.arange(count) / count
        nodes = np.stack([np.sin(theta), np.cos(theta)], axis=1)
        weights = np.full(count, 1.0 / count)
        antipode = (np.arange(count) + count // 2) % count
        return SphereGrid(nodes, weights, antipode)
    if d == 2:
        polar = (quad_degree + 2) // 2
        azimuth = 2 * polar
        quad = jacobi_nodes(2, polar)          # Legendre nodes, weights sum 2
        t = quad.nodes
        r = np.sqrt(np.clip(1.0 - t**2, 0.0, None))
        phi = 2.0 * np.pi * np.arange(azimuth) / azimuth
        nodes = np.stack(
            [
                np.outer(r, np.cos(phi)).ravel(),
                np.outer(r, np.sin(phi)).ravel(),
                np.repeat(t, azimuth),
            ],
            axis=1,
        )
        weights = np.repeat(quad.weights / (2.0 * azimuth), azimuth)
        i = np.repeat(np.arange(polar), azimuth)
        j = np.tile(np.arange(azimuth), polar)
        antipode = (polar - 1 - i) * azimuth + (j + azimuth // 2) % azimuth
        return SphereGrid(nodes, weights, antipode)
    raise ValueError("spectral synthesis is limited to d in {1, 2}")


def _zonal_pass(points, nodes, g, coeff_sets, mode_count=0, mode_weights=None):
    """One Gegenbauer-recurrence sweep over the kernel matrix P_n(points·nodesᵀ).

    Returns (series, dots) where series[i] = Σ_n coeff_sets[i][n]·P_n(T) @ g
    row-wise and dots[n] = mode_weightsᵀ P_n(T) g for n < mode_count.  Chunked
    over rows of `points` so the (rows × Q) work matrices stay bounded.
    """
    d = points.shape[1] - 1
    n_top = max([len(c) for c in coeff_sets] + [mode_count])
    series = [np.zeros(points.shape[0]) for _ in coeff_sets]
    dots = np.zeros(mode_count)
    block = max(1, 4_000_000 // max(len(nodes), 1))
    for start in range(0, points.shape[0], block):
        stop = min(start + block, points.shape[0])
        t = np.clip(points[start:stop] @ nodes.T, -1.0, 1.0)
        p_prev = np.ones_like(t)
        p_cur = None
        for n in range(n_top):
            if n == 0:
                p_n = p_prev
            elif n == 1:
                p_cur = t.copy()
                p_n = p_cur
            else:
                p_next = ((2 * n + d - 3) * t * p_cur - (n - 1) * p_prev) / (n + d - 2)
                p_prev, p_cur = p_cur, p_next
                p_n = p_cur
            col = p_n @ g
            for out, coeffs in zip(series, coeff_sets):
                if n < len(coeffs) and coeffs[n] != 0.0:
                    out[start:stop] += coeffs[n] * col
            if n < mode_count:
                dots[n] += float(mode_weights[start:stop] @ col)
    return series, dots


@dataclass(frozen=True, eq=False)
class RidgeDensity:
    """Everything needed to evaluate φ, L_m, g_m and the variation estimates.

    Degrees run over n < 2m.  `live` marks the degrees where σ̂_k(n) ≠ 0;
    coefficients at the remaining (structural-zero) degrees are excluded
    from every kernel sum.
    """

    d: int
    k: int
    m: int
    nodes: np.ndarray         # (Q, d+1)
    weights: np.ndarray       # (Q,), positive, sum 1
    h_values: np.ndarray      # h̃ at the nodes
    phi_values: np.ndarray    # φ at the nodes
    eta: np.ndarray           # η(n/m), n < 2m
    sigma: np.ndarray         # σ̂_k(n), exactly 0.0 at structural zeros
    live: np.ndarray          # bool, σ̂_k(n) ≠ 0
    mode_energy: np.ndarray   # discrete ‖P_n h̃‖², n < 2m
    kernel_coeffs: np.ndarray  # η(n/m)·N(d,n), all n < 2m (defines L_m)
    lambda_coeffs: np.ndarray  # η(n/m)·N(d,n)/σ̂_k(n) on live degrees, else 0
    parity: str

    @property
    def n_degrees(self) -> int:
        return 2 * self.m


def build_density(h_tilde, k: int, m: int, quad_degree: int | None = None) -> RidgeDensity:
    """Sample h̃ on the quadrature grid and assemble the ridge density φ.

    The declared antipodal parity of ``h_tilde`` (when present) is checked
    against its sampled values, and the discrete projection energy at the
    structural-zero degrees of σ̂_k must vanish — otherwise the density
    φ = Σ η(n/m)·σ̂_k(n)^{-1}·P_n h̃ would silently drop target content.
    """
    d = getattr(h_tilde, "d", None)
    if d is None:
        raise ValueError("build_density needs a SphereFunction with a dimension")
    if d not in (1, 2):
        raise ValueError("spectral synthesis is limited to d in {1, 2}")
    if m < 1:
        raise ValueError("cutoff scale m must be a positive integer")
    if k < 0:
        raise ValueError("activation power k must be nonnegative")
    if quad_degree is None:
        quad_degree = 4 * m
    if quad_degree < 4 * m:
        raise ValueError("quadrature must be exact at least to degree 4m")

    grid = sphere_grid(d, quad_degree)
    h = np.asarray(h_tilde(grid.nodes), dtype=float)
    scale = max(float(np.max(np.abs(h))), 1.0)

    declared = getattr(h_tilde, "parity", "none")
    gap_even = float(np.max(np.abs(h[grid.antipode] - h)))
    gap_odd = float(np.max(np.abs(h[grid.antipode] + h)))
    if declared in ("even", "odd"):
        gap = gap_odd if declared == "odd" else gap_even
        if gap > _PARITY_VALUE_TOL * scale:
            raise ParityError(
                f"declared parity '{declared}' contradicted by sampled values "
                f"(antipodal gap {gap:.3e})"
            )
        parity = declared
    elif gap_even <= _PARITY_VALUE_TOL * scale:
        parity = "even"
    elif gap_odd <= _PARITY_VALUE_TOL * scale:
        parity = "odd"
    else:
        parity = "none"

    n_deg = 2 * m
    spectrum = ActivationSpectrum.build(k, d, n_deg - 1)
    sigma = np.array([float(spectrum.value(n)) for n in range(n_deg)])
    live = np.array([not spectrum.is_zero(n) for n in range(n_deg)])
    eta = np.array([eta_cutoff(n / m) for n in range(n_deg)])
    dims = np.array([harmonic_dim(d, n) for n in range(n_deg)], dtype=float)
    kernel_coeffs = eta * dims
    lambda_coeffs = np.where(live, eta * dims / np.where(live, sigma, 1.0), 0.0)

    g = grid.weights * h
    if d == 1:
        count = len(h)
        spec_h = np.fft.rfft(h)
        energy = np.zeros(n_deg)
        energy[0] = (spec_h[0].real / count) ** 2
        energy[1:] = 2.0 * np.abs(spec_h[1:n_deg]) ** 2 / count**2
        filtered = np.zeros_like(spec_h)
        ratio = np.where(live, eta / np.where(live, sigma, 1.0), 0.0)
        filtered[:n_deg] = spec_h[:n_deg] * ratio
        phi = np.fft.irfft(filtered, n=count)
    else:
        series, dots = _zonal_pass(
            grid.nodes, grid.nodes, g, [lambda_coeffs], mode_count=n_deg, mode_weights=g
        )
        phi = series[0]
        energy = dims * dots

    total = float(np.sum(np.clip(energy, 0.0, None)))
    leaked = float(np.sum(np.clip(energy[~live], 0.0, None)))
    if leaked > _PARITY_ENERGY_TOL * max(total, 1e-30):
        worst = int(np.argmax(np.where(live, -np.inf, energy)))
        raise ParityError(
            f"h̃ has projection energy {leaked:.3e} at degrees where σ̂_{k} "
            f"vanishes (worst degree n={worst}); it cannot come from a legal lift"
        )

    return RidgeDensity(
        d=d,
        k=k,
        m=m,
        nodes=grid.nodes,
        weights=grid.weights,
        h_values=h,
        phi_values=phi,
        eta=eta,
        sigma=sigma,
        live=live,
        mode_energy=energy,
        kernel_coeffs=kernel_coeffs,
        lambda_coeffs=lambda_coeffs,
        parity=parity,
    )


def eval_kernel_Lm(density: RidgeDensity, t):
    """The smoothing kernel L_m(t) = Σ_{n<2m} η(n/m)·N(d,n)·P_n(t)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(np.abs(t_arr) > 1.0 + 1e-12):
        raise ValueError("L_m is defined on [-1, 1]")
    return gegenbauer_series(density.d, density.kernel_coeffs, np.clip(t_arr, -1.0, 1.0))


def eval_projection(density: RidgeDensity, u):
    """The smoothed projection g_m(u) = Σ_q ρ_q·h̃(v_q)·L_m(u·v_q)."""
    pts = as_points(u, density.d + 1)
    g = density.weights * density.h_values
    series, _ = _zonal_pass(pts, density.nodes, g, [density.kernel_coeffs])
    return series[0]


def eval_phi(density: RidgeDensity, u):
    """The ridge density φ(u) = Σ_q ρ_q·h̃(v_q)·Λ_m(u·v_q)."""
    pts = as_points(u, density.d + 1)
    g = density.weights * density.h_values
    series, _ = _zonal_pass(pts, density.nodes, g, [density.lambda_coeffs])
    return series[0]


def projection_on_ball(density: RidgeDensity):
    """S_k g_m as a callable on the unit ball (the network-side target)."""
    sphere_fn = SphereFunction(
        d=density.d,
        evaluator=lambda u: eval_projection(density, u),
        parity=density.parity,
    )
    return lambda x: apply_lowering(sphere_fn, density.k, x)


def conv_sigma_quad(density: RidgeDensity, u):
    """(φ ∗ σ_k)(u) evaluated with the stored sphere quadrature.

    Up to the quadrature error of integrating σ_k against degree-<2m
    polynomials this equals eval_projection — the defining identity of φ.
    """
    pts = as_points(u, density.d + 1)
    t = np.clip(pts @ density.nodes.T, -1.0, 1.0)
    return sigma_k(t, density.k) @ (density.weights * density.phi_values)


def variation_estimate(density: RidgeDensity):
    """(gamma_l2, gamma_l1) = (‖φ‖_{L²}, ‖φ‖_{L¹}) under the stored quadrature.

    gamma_l2 comes from the spectral side, Σ η²·σ̂^{-2}·‖P_n h̃‖² over the
    live degrees; gamma_l1 integrates |φ| on the grid.  The grid is exact
    for the degree ≤ 4m products involved, so gamma_l1 ≤ gamma_l2 holds up
    to roundoff.
    """
    terms = np.zeros(density.n_degrees)
    live = density.live
    terms[live] = (density.eta[live] / density.sigma[live]) ** 2 * density.mode_energy[live]
    deficit = -float(np.sum(terms[terms < 0.0]))
    if deficit > 0.0:
        if deficit > 1e-12 * max(float(np.sum(np.abs(terms))), 1e-30):
            warnings.warn("negative mode variance from quadrature noise clamped to 0")
        terms = np.clip(terms, 0.0, None)
    gamma_l2 = float(np.sqrt(np.sum(terms)))
    gamma_l1 = float(np.sum(density.weights * np.abs(density.phi_values)))
    if gamma_l1 > gamma_l2 * (1.0 + 1e-8) + 1e-15:
        raise NumericalError(
            f"gamma_l1 {gamma_l1:.6e} exceeds gamma_l2 {gamma_l2:.6e}; "
            "the quadrature degree is inconsistent"
        )
    return gamma_l2, gamma_l1

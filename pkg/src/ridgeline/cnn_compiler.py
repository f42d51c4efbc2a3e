"""Exact compilation of shallow ReLU networks into sparse deep CNNs.

The construction factors the stacked inner-weight sequence into short filters
(polynomial root grouping), realizes each filter as a Toeplitz convolution
layer, and keeps every hidden pre-activation positive via per-layer offset
constants so the ReLUs act as identities until the last convolution layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import NumericalError
from .lift import as_points, ball_grid
from .network import ShallowNet, eval_shallow

MAX_FACTOR_LENGTH = 60
RESIDUAL_TOL = 1e-6
CONJUGATE_TOL = 1e-9
AUDIT_POINTS = 1000
AUDIT_SLACK = 1e-9


@dataclass(frozen=True)
class Filter:
    """Convolution filter supported on {0, ..., s}: exactly s+1 taps."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        if taps.ndim != 1 or taps.size < 2:
            raise ValueError(f"filter taps must be a 1-d sequence of length >= 2, "
                             f"got shape {taps.shape}")
        if not np.all(np.isfinite(taps)):
            raise ValueError("non-finite filter taps")
        object.__setattr__(self, "taps", taps)

    @property
    def s(self) -> int:
        return self.taps.size - 1


def toeplitz_matrix(taps: np.ndarray, in_width: int) -> np.ndarray:
    """(in_width + s) x in_width convolution matrix: M[j, k] = taps[j-k]."""
    taps = np.asarray(taps, dtype=float)
    s = taps.size - 1
    mat = np.zeros((in_width + s, in_width))
    cols = np.arange(in_width)
    for t, w in enumerate(taps):
        mat[cols + t, cols] = w
    return mat


def min_depth(n_units: int, d: int, s: int) -> int:
    """Smallest admissible depth floor(Nd/(s-1) + 1) for the factorization."""
    if s < 2:
        raise ValueError(f"need filter support s >= 2, got {s}")
    return math.floor(n_units * d / (s - 1) + 1)


def stack_directions(net: Union[ShallowNet, np.ndarray]) -> np.ndarray:
    """Concatenate the inner directions a_i = v_i[:d], each block reversed, into
    the length-Nd coefficient sequence the filter factorization targets.

    Accepts a network or a raw (N, d) array of inner directions.
    """
    if isinstance(net, ShallowNet):
        directions = net.v[:, :net.d]
    else:
        directions = np.atleast_2d(np.asarray(net, dtype=float))
    if directions.shape[0] == 0:
        raise ValueError("cannot stack an empty network")
    return directions[:, ::-1].reshape(-1)


def _pair_roots(roots: np.ndarray) -> list[np.ndarray]:
    """Split roots into real-linear and conjugate-quadratic factor tap arrays
    (ascending coefficients, monic)."""
    real_mask = np.abs(roots.imag) <= CONJUGATE_TOL * (1.0 + np.abs(roots))
    factors = [np.array([-r, 1.0]) for r in sorted(roots[real_mask].real)]
    upper = sorted(roots[~real_mask & (roots.imag > 0)],
                   key=lambda r: (np.angle(r), abs(r)))
    lower = list(roots[~real_mask & (roots.imag < 0)])
    for r in upper:
        match = min(range(len(lower)), key=lambda i: abs(lower[i] - np.conj(r)))
        gap = abs(lower[match] - np.conj(r))
        if gap > CONJUGATE_TOL * (1.0 + abs(r)):
            raise NumericalError(f"unpaired complex root {r} (conjugate gap {gap:.2e})")
        lower.pop(match)
        factors.append(np.array([abs(r) ** 2, -2.0 * r.real, 1.0]))
    if lower:
        raise NumericalError(f"{len(lower)} complex roots left without conjugates")
    return factors


def _greedy_pack(factors: Sequence[np.ndarray], s: int) -> list[np.ndarray]:
    packed: list[np.ndarray] = []
    current = np.array([1.0])
    for f in factors:
        if current.size - 1 + f.size - 1 <= s:
            current = np.convolve(current, f)
        else:
            packed.append(current)
            current = f
    packed.append(current)
    return packed


def _conv_all(tap_list: Sequence[np.ndarray]) -> np.ndarray:
    out = np.array([1.0])
    for taps in tap_list:
        out = np.convolve(out, taps)
    return out


def _polish_once(tap_list: list[np.ndarray], target: np.ndarray) -> list[np.ndarray]:
    """One Gauss-Newton step on all taps against the target convolution."""
    resid = _conv_all(tap_list)[: target.size] - target
    cols = []
    for i, taps in enumerate(tap_list):
        others = _conv_all([t for j, t in enumerate(tap_list) if j != i])
        for j in range(taps.size):
            col = np.zeros(target.size)
            seg = others[: target.size - j]
            col[j: j + seg.size] = seg
            cols.append(col)
    jac = np.stack(cols, axis=1)
    step, *_ = np.linalg.lstsq(jac, -resid, rcond=None)
    polished = []
    pos = 0
    for taps in tap_list:
        polished.append(taps + step[pos: pos + taps.size])
        pos += taps.size
    return polished


def factor_filter(v: np.ndarray, s: int, depth: int) -> tuple[list[Filter], float]:
    """Factor the coefficient sequence v into `depth` filters of support s.

    Returns (filters, reconstruction residual). The convolution of the returned
    taps reproduces v; a residual above 1e-6 max|v| (after one Gauss-Newton
    polish pass) raises NumericalError. Any depth >= min_depth(len(v), 1, s) is
    guaranteed to fit; smaller depths are attempted and fail only if the packed
    factors do not fit.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"need a nonempty 1-d sequence, got shape {v.shape}")
    if v.size > MAX_FACTOR_LENGTH:
        raise ValueError(f"sequence length {v.size} beyond the supported "
                         f"root-finding scale {MAX_FACTOR_LENGTH}")
    if s < 2:
        raise ValueError(f"need filter support s >= 2, got {s}")
    if depth < 1:
        raise ValueError(f"need depth >= 1, got {depth}")

    def pad(taps: np.ndarray) -> Filter:
        return Filter(np.concatenate([taps, np.zeros(s + 1 - taps.size)]))

    delta0 = pad(np.array([1.0]))
    nz = np.nonzero(np.abs(v) > 0.0)[0]
    if nz.size == 0:
        filters = [pad(np.zeros(1))] + [delta0] * (depth - 1)
        return filters, 0.0

    shift = int(nz[0])
    core = v[shift: int(nz[-1]) + 1]
    tap_list: list[np.ndarray] = []
    if core.size <= s + 1 and shift == 0:
        tap_list.append(core.copy())
    else:
        lead = core[-1]
        roots = np.roots(core[::-1] / lead)
        tap_list = _greedy_pack(_pair_roots(roots), s)
        tap_list[0] = tap_list[0] * lead
        while shift > 0:
            take = min(s, shift)
            delta = np.zeros(take + 1)
            delta[take] = 1.0
            tap_list.append(delta)
            shift -= take

    if len(tap_list) > depth:
        raise NumericalError(f"{len(tap_list)} factors exceed the requested depth "
                             f"{depth}; increase s or depth")
    residual = float(np.max(np.abs(_conv_all(tap_list)[: v.size] - v)))
    scale = float(np.max(np.abs(v)))
    if residual > RESIDUAL_TOL * scale:
        polished = _polish_once(tap_list, v)
        polished_res = float(np.max(np.abs(_conv_all(polished)[: v.size] - v)))
        if polished_res < residual:
            tap_list, residual = polished, polished_res
    if residual > RESIDUAL_TOL * scale:
        raise NumericalError(f"factorization residual {residual:.3e} exceeds "
                             f"{RESIDUAL_TOL:.0e} x max|v| = {RESIDUAL_TOL * scale:.3e}")
    filters = [pad(t) for t in tap_list] + [delta0] * (depth - len(tap_list))
    return filters, residual


@dataclass(frozen=True, eq=False)
class DeepCNN:
    """Sparse CNN with Toeplitz layers, widths d + ls, and block-form biases."""

    s: int
    L: int
    d: int
    filters: tuple[Filter, ...]
    biases: tuple[np.ndarray, ...]
    out_w: np.ndarray
    out_b: float
    b_consts: Optional[tuple[float, ...]] = None
    matrices: tuple[np.ndarray, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if len(self.filters) != self.L or len(self.biases) != self.L:
            raise ValueError(f"need {self.L} filters and biases, got "
                             f"{len(self.filters)}, {len(self.biases)}")
        mats = []
        for ell, filt in enumerate(self.filters):
            if filt.s != self.s:
                raise ValueError(f"filter {ell} has support {filt.s}, expected {self.s}")
            width_in = self.d + ell * self.s
            mats.append(toeplitz_matrix(filt.taps, width_in))
            b = np.asarray(self.biases[ell], dtype=float)
            if b.shape != (width_in + self.s,):
                raise ValueError(f"bias {ell} has shape {b.shape}, expected "
                                 f"({width_in + self.s},)")
            if ell < self.L - 1 and b.size > 2 * self.s + 1:
                middle = b[self.s: b.size - self.s]
                if np.max(np.abs(middle - middle[0])) > 1e-9 * (1 + np.max(np.abs(b))):
                    raise ValueError(f"bias {ell} violates the block form")
        out_w = np.asarray(self.out_w, dtype=float)
        if out_w.shape != (self.d + self.L * self.s,):
            raise ValueError(f"output weights have shape {out_w.shape}, expected "
                             f"({self.d + self.L * self.s},)")
        object.__setattr__(self, "out_w", out_w)
        object.__setattr__(self, "matrices", tuple(mats))

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(self.d + ell * self.s for ell in range(self.L + 1))

    @property
    def param_count(self) -> int:
        """Free parameters: L(s+1) filter taps, (L-1)(2s+1) block-form biases,
        the last conv bias and output weights (d+Ls each), one output bias."""
        return (5 * self.s + 2) * self.L + 2 * self.d - 2 * self.s


@dataclass(frozen=True, eq=False)
class DeepNetGeneric:
    """Plain deep ReLU network: hidden layers (A, b), affine output layer."""

    d: int
    weights: tuple[np.ndarray, ...]
    hidden_biases: tuple[np.ndarray, ...]
    out_w: np.ndarray
    out_b: float

    def __post_init__(self):
        if len(self.weights) != len(self.hidden_biases):
            raise ValueError("weights/biases length mismatch")
        width = self.d
        for ell, (a, b) in enumerate(zip(self.weights, self.hidden_biases)):
            if a.ndim != 2 or a.shape[1] != width or b.shape != (a.shape[0],):
                raise ValueError(f"layer {ell} shapes {a.shape}, {b.shape} break the "
                                 f"chain at width {width}")
            width = a.shape[0]
        if np.asarray(self.out_w).shape != (width,):
            raise ValueError(f"output weights must have shape ({width},)")

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def width(self) -> int:
        return max((a.shape[0] for a in self.weights), default=self.d)


DeepNet = Union[DeepCNN, DeepNetGeneric]


def eval_deep(net: DeepNet, x: np.ndarray) -> np.ndarray:
    """Forward pass with ReLU hidden activations and an affine output layer."""
    x = as_points(x, net.d)
    h = x
    if isinstance(net, DeepCNN):
        layers = zip(net.matrices, net.biases)
    else:
        layers = zip(net.weights, net.hidden_biases)
    for a, b in layers:
        h = np.maximum(h @ a.T + b, 0.0)
    return h @ np.asarray(net.out_w, dtype=float) + net.out_b


def assemble_cnn(filters: Sequence[Filter], a_mat: np.ndarray, b_vec: np.ndarray,
                 c_vec: np.ndarray, c0: float, s: int) -> DeepCNN:
    """Assemble the compiled CNN from filters and shallow data (a_i, b_i, c_i, c_0).

    Hidden layers carry offset constants B^(l) = 1 + max row 2-norm of the
    cumulative Toeplitz product, so every pre-activation up to layer L-2 stays
    >= 1 on the ball and ReLU is transparent; the last convolution layer puts
    b_i minus the accumulated offset at coordinates i*d, where the output layer
    reads with weight c_i.
    """
    a_mat = np.atleast_2d(np.asarray(a_mat, dtype=float))
    b_vec = np.asarray(b_vec, dtype=float)
    c_vec = np.asarray(c_vec, dtype=float)
    n_units, d = a_mat.shape
    L = len(filters)
    if d + L * s < n_units * d:
        raise ValueError(f"final width {d + L * s} cannot host {n_units} units of "
                         f"dimension {d}")

    mats = [toeplitz_matrix(f.taps, d + ell * s) for ell, f in enumerate(filters)]
    biases: list[np.ndarray] = []
    b_consts: list[float] = []
    cumulative = np.eye(d)
    for ell in range(L - 1):
        cumulative = mats[ell] @ cumulative
        b_const = 1.0 + float(np.max(np.linalg.norm(cumulative, axis=1)))
        prev = b_consts[-1] if b_consts else 0.0
        biases.append(b_const - prev * (mats[ell] @ np.ones(mats[ell].shape[1]))
                      if ell else np.full(mats[ell].shape[0], b_const))
        b_consts.append(b_const)

    cumulative = mats[-1] @ cumulative
    prev = b_consts[-1] if b_consts else 0.0
    offset = prev * (mats[-1] @ np.ones(mats[-1].shape[1]))
    final_bias = np.zeros(mats[-1].shape[0])
    out_w = np.zeros(mats[-1].shape[0])
    for i in range(n_units):
        row = (i + 1) * d - 1
        gap = np.max(np.abs(cumulative[row] - a_mat[i]))
        if gap > 1e-6 * (1.0 + np.max(np.abs(a_mat))):
            raise NumericalError(f"cumulative Toeplitz row {row} misses a_{i + 1} "
                                 f"by {gap:.3e}")
        final_bias[row] = b_vec[i] - offset[row]
        out_w[row] = c_vec[i]
    biases.append(final_bias)

    cnn = DeepCNN(s=s, L=L, d=d, filters=tuple(filters),
                  biases=tuple(np.asarray(b, dtype=float) for b in biases),
                  out_w=out_w, out_b=float(c0),
                  b_consts=tuple(b_consts) if b_consts else None)
    _audit_positivity(cnn)
    return cnn


def _audit_positivity(cnn: DeepCNN) -> None:
    """Pre-activations of layers 0..L-2 must stay >= 1 - 1e-9 on the ball."""
    if cnn.L < 2:
        return
    x = ball_grid(cnn.d, AUDIT_POINTS, seed=0)
    h = x
    for ell in range(cnn.L - 1):
        pre = h @ cnn.matrices[ell].T + cnn.biases[ell]
        if float(np.min(pre)) < 1.0 - AUDIT_SLACK:
            raise NumericalError(f"positivity audit failed at layer {ell}: "
                                 f"min pre-activation {np.min(pre):.3e}")
        h = np.maximum(pre, 0.0)


def shallow_to_cnn(net: ShallowNet, s: int, depth: Optional[int] = None) -> DeepCNN:
    """Compile a k=1 shallow net into an exactly equivalent sparse CNN."""
    if net.k != 1:
        raise ValueError(f"CNN compilation relies on ReLU transparency and needs "
                         f"k = 1, got k = {net.k}")
    if net.n_units == 0:
        raise ValueError("cannot compile an empty network")
    needed = min_depth(net.n_units, net.d, s)
    depth = needed if depth is None else depth
    if depth < needed:
        raise ValueError(f"depth {depth} below the factorization minimum {needed}")
    v = stack_directions(net)
    filters, _ = factor_filter(v, s, depth)
    return assemble_cnn(filters, net.v[:, :net.d], net.v[:, net.d], net.a, 0.0, s)


def shallow_to_generic(net: ShallowNet) -> DeepNetGeneric:
    """One-hidden-layer generic parameterization of a k=1 shallow net."""
    if net.k != 1:
        raise ValueError(f"the generic deep class uses ReLU, needs k = 1, "
                         f"got k = {net.k}")
    return DeepNetGeneric(d=net.d, weights=(net.v[:, :net.d].copy(),),
                          hidden_biases=(net.v[:, net.d].copy(),),
                          out_w=net.a.copy(), out_b=0.0)


def kappa_norm(net: DeepNetGeneric) -> float:
    """Product norm: max row 1-norm of [A|b] per layer, hidden factors floored
    at 1, times the output-layer norm."""
    kappa = float(np.sum(np.abs(net.out_w)) + abs(net.out_b))
    for a, b in zip(net.weights, net.hidden_biases):
        rows = np.sum(np.abs(a), axis=1) + np.abs(b)
        kappa *= max(float(np.max(rows)) if rows.size else 0.0, 1.0)
    return kappa


def pad_generic(net: DeepNetGeneric, extra: int) -> DeepNetGeneric:
    """Widen every hidden layer by `extra` passthrough units (row e_1, then a
    zero column downstream); evaluation and kappa are unchanged."""
    if extra < 0:
        raise ValueError(f"need extra >= 0, got {extra}")
    weights = []
    biases = []
    for ell, (a, b) in enumerate(zip(net.weights, net.hidden_biases)):
        a = a.copy()
        if ell > 0:
            a = np.hstack([a, np.zeros((a.shape[0], extra))])
        pad_rows = np.zeros((extra, a.shape[1]))
        pad_rows[:, 0] = 1.0
        weights.append(np.vstack([a, pad_rows]))
        biases.append(np.concatenate([b, np.zeros(extra)]))
    out_w = np.concatenate([net.out_w, np.zeros(extra)]) if net.depth else net.out_w
    return DeepNetGeneric(d=net.d, weights=tuple(weights),
                          hidden_biases=tuple(biases), out_w=out_w,
                          out_b=net.out_b)


@dataclass(frozen=True)
class EquivalenceReport:
    n_points: int
    max_gap: float
    mean_gap: float
    rel_gap: float
    tol: float
    passed: bool
    seed: int


def verify_equivalence(shallow: ShallowNet, deep: DeepNet, n_points: int = 500,
                       seed: int = 0, tol: float = RESIDUAL_TOL) -> EquivalenceReport:
    """Sample |shallow - deep| on random ball points; pass/fail at relative tol."""
    if shallow.d != deep.d:
        raise ValueError(f"dimension mismatch: {shallow.d} vs {deep.d}")
    x = ball_grid(shallow.d, n_points, seed=seed)
    f_ref = eval_shallow(shallow, x)
    gaps = np.abs(f_ref - eval_deep(deep, x))
    scale = 1.0 + float(np.max(np.abs(f_ref)))
    max_gap = float(np.max(gaps))
    return EquivalenceReport(n_points=n_points, max_gap=max_gap,
                             mean_gap=float(np.mean(gaps)),
                             rel_gap=max_gap / scale, tol=tol,
                             passed=bool(max_gap <= tol * scale), seed=seed)


def write_net_text(net: Union[ShallowNet, DeepCNN]) -> str:
    """Plain-text network format: `shallow k d N` with one unit per line, or
    `cnn s L d` with filter, bias, and output lines."""
    lines = []
    if isinstance(net, ShallowNet):
        lines.append(f"shallow {net.k} {net.d} {net.n_units}")
        for a_i, v_i in zip(net.a, net.v):
            lines.append(" ".join(repr(float(val)) for val in (a_i, *v_i)))
    elif isinstance(net, DeepCNN):
        lines.append(f"cnn {net.s} {net.L} {net.d}")
        for f in net.filters:
            lines.append(" ".join(repr(float(val)) for val in f.taps))
        for b in net.biases:
            lines.append(" ".join(repr(float(val)) for val in b))
        lines.append(" ".join(repr(float(val)) for val in (*net.out_w, net.out_b)))
    else:
        raise ValueError(f"cannot serialize {type(net).__name__}")
    return "\n".join(lines) + "\n"


def read_net_text(text: str) -> Union[ShallowNet, DeepCNN]:
    rows = [line.split() for line in text.strip().splitlines() if line.strip()]
    if not rows:
        raise ValueError("empty network text")
    kind = rows[0][0]
    header = [int(tok) for tok in rows[0][1:]]
    body = [np.array([float(tok) for tok in row]) for row in rows[1:]]
    if kind == "shallow":
        k, d, n_units = header
        if len(body) != n_units or any(row.size != d + 2 for row in body):
            raise ValueError("malformed shallow network body")
        units = np.stack(body) if n_units else np.zeros((0, d + 2))
        return ShallowNet(k=k, d=d, a=units[:, 0], v=units[:, 1:])
    if kind == "cnn":
        s, L, d = header
        if len(body) != 2 * L + 1:
            raise ValueError(f"expected {2 * L + 1} body lines, got {len(body)}")
        filters = tuple(Filter(row) for row in body[:L])
        biases = tuple(body[L: 2 * L])
        last = body[2 * L]
        return DeepCNN(s=s, L=L, d=d, filters=filters, biases=biases,
                       out_w=last[:-1], out_b=float(last[-1]))
    raise ValueError(f"unknown network kind {kind!r}")

"""Synthetic regression experiments with l1-constrained random-feature fits.

The global least-squares problem over networks with free directions is
non-convex; everything here trains a convex surrogate instead: a dictionary of
random unit directions with the outer weights constrained to an l1 ball. The
fitted model is always a member of the corresponding constrained network
class, so measured risk decay can be compared against the predicted exponents.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Union

import numpy as np

from .harmonics import sigma_k
from .lift import TargetFunction, as_points, make_target
from .network import ShallowNet, eval_shallow
from .rates import RateTable
from .rates import fit_slope as _fit_slope_arrays

FAMILIES = ("shallow", "overparam", "cnn")
CLASS_TAGS = ("holder", "variation")

Target = Union[TargetFunction, ShallowNet]


def uniform_ball(rng: np.random.Generator, count: int, d: int) -> np.ndarray:
    """Uniform draws from the unit ball: Gaussian direction times U^(1/d) radius."""
    z = rng.standard_normal((count, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = rng.uniform(0.0, 1.0, size=count) ** (1.0 / d)
    return z * r[:, None]


@dataclass(frozen=True)
class RegressionModel:
    """Data-generating process: y = h(x) + noise, x uniform on the unit ball."""

    target: Target
    d: int
    noise_std: float = 0.5

    def __post_init__(self):
        if self.noise_std < 0.0:
            raise ValueError(f"need noise_std >= 0, got {self.noise_std}")
        if self.target.d != self.d:
            raise ValueError(f"target dimension {self.target.d} != model d {self.d}")

    def values(self, x: np.ndarray) -> np.ndarray:
        if isinstance(self.target, ShallowNet):
            return eval_shallow(self.target, x)
        return np.asarray(self.target(x), dtype=float)


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    seed: int

    def __post_init__(self):
        if self.x.ndim != 2 or self.y.shape != (self.x.shape[0],):
            raise ValueError(f"inconsistent shapes {self.x.shape}, {self.y.shape}")
        if np.max(np.linalg.norm(self.x, axis=1)) > 1.0 + 1e-9:
            raise ValueError("covariates must lie in the unit ball")

    @property
    def n(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class ErmConfig:
    """Convex-fit settings: dictionary size, l1 budget, truncation level."""

    n_features: int
    budget: float
    trunc: float
    k: int = 1
    max_iters: int = 2000
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.n_features < 1:
            raise ValueError(f"need n_features >= 1, got {self.n_features}")
        if self.budget <= 0.0 or self.trunc <= 0.0:
            raise ValueError("budget and trunc must be positive")
        if self.k < 0:
            raise ValueError(f"need k >= 0, got {self.k}")
        if self.max_iters < 1 or self.tol <= 0.0:
            raise ValueError("need max_iters >= 1 and tol > 0")


def generate_data(model: RegressionModel, n: int, seed: int) -> Dataset:
    """n >= 2 covariates uniform on the ball with Gaussian-noise responses."""
    if n < 2:
        raise ValueError(f"need n >= 2 samples, got {n}")
    rng = np.random.default_rng(seed)
    x = uniform_ball(rng, n, model.d)
    y = model.values(x)
    if model.noise_std > 0.0:
        y = y + model.noise_std * rng.standard_normal(n)
    return Dataset(x=x, y=y, seed=seed)


def project_l1(w: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the l1 ball by the sorting method."""
    if radius <= 0.0:
        raise ValueError(f"need radius > 0, got {radius}")
    a = np.abs(w)
    if float(np.sum(a)) <= radius:
        return w.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u) - radius
    rho = int(np.max(np.nonzero(u * np.arange(1, a.size + 1) > css)[0]))
    theta = css[rho] / (rho + 1.0)
    return np.sign(w) * np.maximum(a - theta, 0.0)


class RidgeFeatureOperator:
    """Matrix-free products with the n x K feature table sigma_k((x, 1) v_j).

    For d = 1, k = 1 the products use kink-sorted prefix sums in O(n + K) per
    call after an O((n + K) log(n + K)) setup; other cases fall back to a dense
    table.
    """

    def __init__(self, x: np.ndarray, v: np.ndarray, k: int = 1):
        self.x = as_points(x, v.shape[1] - 1)
        self.v = np.asarray(v, dtype=float)
        self.k = k
        self.n, self.d = self.x.shape
        self.K = self.v.shape[0]
        self._dense: Optional[np.ndarray] = None
        self._fast = self.d == 1 and k == 1
        if self._fast:
            self._setup_fast()

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.K)

    def _setup_fast(self):
        x1 = self.x[:, 0]
        v1, v2 = self.v[:, 0], self.v[:, 1]
        self._x1 = x1
        self._pos = np.nonzero(v1 > 0.0)[0]
        self._neg = np.nonzero(v1 < 0.0)[0]
        self._flat_const = np.where(v1 == 0.0, np.maximum(v2, 0.0), 0.0)
        t_pos = -v2[self._pos] / v1[self._pos]
        t_neg = -v2[self._neg] / v1[self._neg]
        self._pos = self._pos[np.argsort(t_pos, kind="stable")]
        self._neg = self._neg[np.argsort(t_neg, kind="stable")]
        self._t_pos = np.sort(t_pos, kind="stable")
        self._t_neg = np.sort(t_neg, kind="stable")
        # a unit on its own kink contributes 0, so tie sides are immaterial
        self._count_pos = np.searchsorted(self._t_pos, x1, side="left")
        self._count_neg = np.searchsorted(self._t_neg, x1, side="right")
        self._ord_x = np.argsort(x1, kind="stable")
        xs = x1[self._ord_x]
        self._start_pos = np.searchsorted(xs, self._t_pos, side="right")
        self._stop_neg = np.searchsorted(xs, self._t_neg, side="left")
        self._xs = xs

    def matvec(self, w: np.ndarray) -> np.ndarray:
        if not self._fast:
            return self.dense() @ w
        v1, v2 = self.v[:, 0], self.v[:, 1]
        out = np.full(self.n, float(w @ self._flat_const))
        for idx, t_counts, sign in ((self._pos, self._count_pos, 1.0),
                                    (self._neg, self._count_neg, -1.0)):
            if idx.size == 0:
                continue
            p1 = np.concatenate([[0.0], np.cumsum(w[idx] * v1[idx])])
            p2 = np.concatenate([[0.0], np.cumsum(w[idx] * v2[idx])])
            if sign > 0:
                out += self._x1 * p1[t_counts] + p2[t_counts]
            else:
                out += (self._x1 * (p1[-1] - p1[t_counts])
                        + (p2[-1] - p2[t_counts]))
        return out

    def rmatvec(self, r: np.ndarray) -> np.ndarray:
        if not self._fast:
            return self.dense().T @ r
        out = self._flat_const * float(np.sum(r))
        rs = r[self._ord_x]
        srx = np.concatenate([[0.0], np.cumsum(rs * self._xs)])
        sr = np.concatenate([[0.0], np.cumsum(rs)])
        v1, v2 = self.v[:, 0], self.v[:, 1]
        out[self._pos] += (v1[self._pos] * (srx[-1] - srx[self._start_pos])
                           + v2[self._pos] * (sr[-1] - sr[self._start_pos]))
        out[self._neg] += (v1[self._neg] * srx[self._stop_neg]
                           + v2[self._neg] * sr[self._stop_neg])
        return out

    def dense(self) -> np.ndarray:
        if self._dense is None:
            aug = np.hstack([self.x, np.ones((self.n, 1))])
            dtype = np.float64 if self.n * self.K <= 2 ** 25 else np.float32
            self._dense = sigma_k(aug @ self.v.T, self.k).astype(dtype)
        return np.asarray(self._dense, dtype=np.float64) \
            if self._dense.dtype != np.float64 else self._dense


@dataclass(frozen=True)
class ErmResult:
    """Fit outcome: the network plus optimizer bookkeeping."""

    net: ShallowNet
    weights: np.ndarray
    objective: float
    zero_objective: float
    converged: bool
    iterations: int
    grad_map_norm: float


def erm_fit(data: Dataset, cfg: ErmConfig) -> ErmResult:
    """l1-ball-constrained least squares over a random ridge dictionary.

    Accelerated projected gradient with backtracking and function restarts, run
    to gradient-map tolerance or the iteration cap (then flagged). The returned
    objective never exceeds the zero net's.
    """
    rng = np.random.default_rng(cfg.seed)
    v = rng.standard_normal((cfg.n_features, data.x.shape[1] + 1))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    op = RidgeFeatureOperator(data.x, v, cfg.k)
    y = data.y
    n = data.n

    def objective(pred):
        gap = pred - y
        return float(gap @ gap) / n

    # Lipschitz seed for the step size by power iteration on (2/n) F^T F
    probe = rng.standard_normal(cfg.n_features)
    probe /= np.linalg.norm(probe)
    for _ in range(12):
        probe = op.rmatvec(op.matvec(probe))
        norm = float(np.linalg.norm(probe))
        if norm == 0.0:
            break
        probe /= norm
    step = n / (2.0 * norm) if norm > 0.0 else 1.0

    w = np.zeros(cfg.n_features)
    z = w.copy()
    pred_w = np.zeros(n)
    f_w = objective(pred_w)
    best_w, best_f = w.copy(), f_w
    momentum = 1.0
    converged = False
    grad_map = math.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        pred_z = op.matvec(z)
        f_z = objective(pred_z)
        grad = 2.0 * op.rmatvec(pred_z - y) / n
        while True:
            w_new = project_l1(z - step * grad, cfg.budget)
            delta = w_new - z
            pred_new = op.matvec(w_new)
            f_new = objective(pred_new)
            bound = f_z + float(grad @ delta) + float(delta @ delta) / (2.0 * step)
            if f_new <= bound + 1e-15 * (1.0 + abs(f_z)):
                break
            step *= 0.5
        grad_map = float(np.linalg.norm(w_new - z)) / step
        if f_new < best_f:
            best_w, best_f = w_new, f_new
        if grad_map <= cfg.tol:
            converged = True
            w = w_new
            break
        if f_new > f_w:    # momentum overshoot: restart
            momentum = 1.0
            z = w_new
        else:
            m_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * momentum ** 2))
            z = w_new + ((momentum - 1.0) / m_new) * (w_new - w)
            momentum = m_new
        w, f_w = w_new, f_new

    # support polish: exact least squares on the active atoms, kept only when
    # it stays inside the budget (so it can only improve the ERM objective)
    support = np.nonzero(best_w)[0]
    if 0 < support.size <= min(n, 2000):
        aug = np.hstack([data.x, np.ones((n, 1))])
        cols = sigma_k(aug @ v[support].T, cfg.k)
        refined, *_ = np.linalg.lstsq(cols, y, rcond=None)
        if float(np.sum(np.abs(refined))) <= cfg.budget * (1.0 + 1e-12):
            f_ref = objective(cols @ refined)
            if f_ref < best_f:
                best_w = np.zeros(cfg.n_features)
                best_w[support] = refined
                best_f = f_ref

    keep = np.nonzero(best_w)[0]
    net = ShallowNet(k=cfg.k, d=op.d, a=best_w[keep], v=v[keep])
    return ErmResult(net=net, weights=best_w, objective=best_f,
                     zero_objective=objective(np.zeros(n)), converged=converged,
                     iterations=it, grad_map_norm=grad_map)


def truncate_predict(net: ShallowNet, trunc: float, x: np.ndarray) -> np.ndarray:
    """Predictions clamped to [-trunc, trunc]."""
    if trunc <= 0.0:
        raise ValueError(f"need a positive truncation level, got {trunc}")
    return np.clip(eval_shallow(net, x), -trunc, trunc)


def excess_risk(net: ShallowNet, trunc: float, model: RegressionModel,
                n_mc: int = 4096, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo squared L2(mu) gap between the truncated fit and the target."""
    if n_mc < 1000:
        raise ValueError(f"need n_mc >= 1000 for a stable estimate, got {n_mc}")
    rng = np.random.default_rng(seed)
    x = uniform_ball(rng, n_mc, model.d)
    gap = truncate_predict(net, trunc, x) - model.values(x)
    sq = gap * gap
    return float(np.mean(sq)), float(np.std(sq, ddof=1) / math.sqrt(n_mc))


class Schedule(NamedTuple):
    size: int
    budget: float
    trunc: float


def _ceil_power(n: int, exponent: float) -> int:
    """ceil(n^exponent) with snapping against float error at integer powers."""
    val = float(n) ** float(exponent)
    nearest = round(val)
    if abs(val - nearest) < 1e-9 * max(nearest, 1):
        return int(nearest)
    return math.ceil(val)


def schedule_hyper(family: str, class_tag: str, d: int, alpha: Optional[float],
                   n: int) -> Schedule:
    """Theory-driven hyperparameters (size, l1 budget, truncation) at sample size n."""
    _check_combo(family, class_tag)
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if class_tag == "holder":
        if alpha is None or not 0.0 < alpha < (d + 3) / 2.0:
            raise ValueError(f"holder schedules need 0 < alpha < (d+3)/2, "
                             f"got {alpha}")
        if family == "shallow":
            size = _ceil_power(n, d / (d + 2.0 * alpha))
            budget = float(n) ** ((d + 3.0 - 2.0 * alpha) / (2.0 * d + 4.0 * alpha))
        elif family == "overparam":
            size = _ceil_power(n, d / (d + 3.0 + 2.0 * alpha))
            budget = float(n) ** (0.5 - 2.0 * alpha / (d + 3.0 + 2.0 * alpha))
        else:
            size = _ceil_power(n, d / (2.0 * d + 2.0 * alpha))
            budget = max(2.0, math.log(n))
        trunc = max(1.0, math.log(n))
    else:
        if family == "shallow":
            size = _ceil_power(n, d / (2.0 * d + 3.0))
            budget = 1.0
        elif family == "overparam":
            size = _ceil_power(n, d / (2.0 * d + 6.0))
            budget = 2.0 * math.sqrt(d + 1.0)
        else:
            size = _ceil_power(n, d / (3.0 * d + 3.0))
            budget = max(2.0, math.log(n))
        trunc = max(math.sqrt(2.0), math.log(n))
    return Schedule(size=size, budget=budget, trunc=trunc)


def dictionary_size(family: str, class_tag: str, n: int, size: int,
                    filter_support: int = 2, d: int = 1) -> int:
    """Random-dictionary width for the convex surrogate of each family.

    Small-class families keep the scheduled unit count (the fit then lies in
    the scheduled class); budget-constrained families use an n-proportional
    dictionary, where the l1 radius is the binding constraint.
    """
    _check_combo(family, class_tag)
    if family == "cnn":
        size = max(1, math.ceil(size * (filter_support - 1) / d))
    if class_tag == "holder":
        return max(size, 4 * n) if family == "overparam" else size
    return 4 * n if family == "overparam" else max(4 * n, 64)


def _check_combo(family: str, class_tag: str) -> None:
    if family not in FAMILIES or class_tag not in CLASS_TAGS:
        raise ValueError(f"unknown family/class combination "
                         f"({family!r}, {class_tag!r})")


def _frac(alpha) -> Fraction:
    if isinstance(alpha, Fraction):
        return alpha
    return Fraction(alpha)


def predict_rate(family: str, class_tag: str, d: int, alpha=None) -> Fraction:
    """Exact regression-risk exponent p in risk ~ n^(-p) for each family/class."""
    _check_combo(family, class_tag)
    d = Fraction(d)
    if class_tag == "holder":
        a = _frac(alpha)
        if a <= 0:
            raise ValueError(f"need alpha > 0, got {alpha}")
        if family == "shallow":
            return 2 * a / (d + 2 * a)
        if family == "overparam":
            return 2 * a / (d + 3 + 2 * a)
        return a / (d + a)
    if family == "shallow":
        return (d + 3) / (2 * d + 3)
    if family == "overparam":
        return Fraction(1, 2)
    return (d + 3) / (3 * d + 3)


def approx_rate(family: str, class_tag: str, d: int, alpha=None) -> Fraction:
    """Exact approximation exponent in the size parameter (units, width, depth)."""
    _check_combo(family, class_tag)
    d = Fraction(d)
    if class_tag == "holder":
        a = _frac(alpha)
        if a <= 0:
            raise ValueError(f"need alpha > 0, got {alpha}")
        return a / d
    return Fraction(1, 2) + Fraction(3, 1) / (2 * d)


def approx_budget_rate(family: str, class_tag: str, d: int, alpha=None
                       ) -> Optional[Fraction]:
    """Budget-side approximation exponent M^(-2a/(d+3-2a)) where one applies."""
    _check_combo(family, class_tag)
    if class_tag != "holder" or family == "cnn":
        return None
    a = _frac(alpha)
    d = Fraction(d)
    if not 0 < a < (d + 3) / 2:
        raise ValueError(f"need 0 < alpha < (d+3)/2, got {alpha}")
    return 2 * a / (d + 3 - 2 * a)


def rademacher_bound(budget: float, depth: int, d: int, n: int) -> float:
    """Generalization scale M sqrt(2(L + 2 + log(d+1))) / sqrt(n)."""
    if budget < 0.0 or depth < 0 or d < 1 or n < 1:
        raise ValueError("need budget >= 0, depth >= 0, d >= 1, n >= 1")
    return budget * math.sqrt(2.0 * (depth + 2.0 + math.log(d + 1.0))) / math.sqrt(n)


def fit_slope(table: RateTable, xname: str = "n", yname: str = "risk_mean"
              ) -> tuple[float, float]:
    """Log-log slope of a rate table; needs at least 3 rows."""
    if len(table) < 3:
        raise ValueError(f"need at least 3 rows for a slope, got {len(table)}")
    return _fit_slope_arrays(table.column(xname), table.column(yname))


def make_variation_target(d: int, seed: int = 0) -> ShallowNet:
    """Fixed one-unit network target with its kink strictly inside the ball."""
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(d)
    w /= np.linalg.norm(w)
    v = np.concatenate([w, [-0.31]])
    v /= np.linalg.norm(v)
    return ShallowNet(k=1, d=d, a=np.array([0.7]), v=v[None, :])


def run_regression_sweep(family: str, class_tag: str, d: int, alpha: Optional[float],
                         n_list: list[int], trials: int = 20, noise: float = 0.5,
                         seed: int = 0, threads: int = 1,
                         budget_override: Optional[float] = None,
                         max_iters: int = 2000) -> RateTable:
    """Risk-vs-n sweep: fit every (n, trial) cell, tabulate mean excess risk.

    Each cell gets its own seed stream; rows also record the risk without
    truncation and the fraction of fits that reached tolerance.
    """
    _check_combo(family, class_tag)
    if trials < 1:
        raise ValueError(f"need trials >= 1, got {trials}")
    if class_tag == "holder":
        if alpha is None:
            raise ValueError("holder sweeps need a finite alpha")
        target: Target = make_target("weierstrass", d, alpha=alpha)
    else:
        target = make_variation_target(d)
    model = RegressionModel(target=target, d=d, noise_std=noise)

    def run_cell(i: int, n: int, trial: int):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(i, trial))
        data_seed, dict_seed, mc_seed = (int(s) for s in ss.generate_state(3))
        sched = schedule_hyper(family, class_tag, d, alpha, n)
        budget = budget_override if budget_override is not None else sched.budget
        k_dict = dictionary_size(family, class_tag, n, sched.size, d=d)
        data = generate_data(model, n, data_seed)
        cfg = ErmConfig(n_features=k_dict, budget=budget, trunc=sched.trunc,
                        max_iters=max_iters, seed=dict_seed)
        fit = erm_fit(data, cfg)
        risk, _ = excess_risk(fit.net, sched.trunc, model, seed=mc_seed)
        wide = 1e6 * max(sched.trunc, 1.0)   # effectively untruncated
        raw_risk, _ = excess_risk(fit.net, wide, model, seed=mc_seed)
        return risk, raw_risk, fit.converged

    table = RateTable(names=("n", "size", "budget", "trunc", "risk_mean",
                             "risk_std", "raw_risk_mean", "converged_frac"),
                      meta={"family": family, "class_tag": class_tag, "d": d,
                            "alpha": alpha, "trials": trials, "noise": noise,
                            "seed": seed,
                            "predicted_exponent": float(predict_rate(
                                family, class_tag, d, alpha))})
    for i, n in enumerate(n_list):
        sched = schedule_hyper(family, class_tag, d, alpha, n)
        budget = budget_override if budget_override is not None else sched.budget
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                cells = list(pool.map(lambda t: run_cell(i, n, t), range(trials)))
        else:
            cells = [run_cell(i, n, t) for t in range(trials)]
        risks = np.array([c[0] for c in cells])
        raw = np.array([c[1] for c in cells])
        conv = np.mean([c[2] for c in cells])
        table.add_row(n, sched.size, budget, sched.trunc, np.mean(risks),
                      np.std(risks, ddof=1) if trials > 1 else 0.0,
                      np.mean(raw), conv)
    if len(table) >= 3:
        table.meta["slope"], table.meta["slope_stderr"] = fit_slope(table)
    return table

"""Experiment runner: seeded subcommands emitting CSV, SVG plots, and manifests.

Every run writes its tables with fixed 17-significant-digit formatting (byte
stable under a fixed seed and thread count) plus one JSON manifest listing the
produced files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .cnn_compiler import (assemble_cnn, factor_filter, min_depth,
                           read_net_text, stack_directions, verify_equivalence,
                           write_net_text)
from .errors import NumericalError
from .harmonics import (ZeroTag, jacobi_nodes, sigma_hat_closed,
                        sigma_hat_quad)
from .kernelize import build_density, projection_on_ball, variation_estimate
from .lift import TARGET_NAMES, lift_to_sphere, make_target
from .network import ShallowNet, discretize_mc, eval_shallow, sup_error, sweep_approx
from .rates import fit_slope
from .regression_lab import (CLASS_TAGS, FAMILIES, approx_budget_rate,
                             approx_rate, predict_rate, run_regression_sweep)

PLOT_WIDTH = 640
PLOT_HEIGHT = 440
PLOT_MARGIN = (70.0, 20.0, 20.0, 50.0)   # left, right, top, bottom


def fmt_value(value) -> str:
    """CSV cell formatting: booleans as true/false, floats at 17 digits."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_csv(path: Path, names: Sequence[str], rows: Sequence[Sequence]) -> Path:
    lines = [",".join(names)]
    for row in rows:
        lines.append(",".join(fmt_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"empty CSV file {path}")
    names = lines[0].split(",")
    return names, [ln.split(",") for ln in lines[1:]]


def emit_plot(csv_path, x_col: str, y_col: str, loglog: bool = True,
              out_path=None) -> Path:
    """Standalone SVG polyline of one CSV column pair, with a slope label."""
    csv_path = Path(csv_path)
    names, rows = read_csv(csv_path)
    if not rows:
        raise ValueError(f"no data rows in {csv_path}")
    for col in (x_col, y_col):
        if col not in names:
            raise ValueError(f"column {col!r} not in {names}")
    x = np.array([float(r[names.index(x_col)]) for r in rows])
    y = np.array([float(r[names.index(y_col)]) for r in rows])
    slope_label = ""
    if loglog:
        if np.any(x <= 0.0) or np.any(y <= 0.0):
            raise ValueError("log-log plot needs strictly positive values")
        if x.size >= 2 and np.unique(x).size >= 2:
            slope, _ = fit_slope(x, y)
            slope_label = f"slope {slope:.2f}"
        x, y = np.log10(x), np.log10(y)

    left, right, top, bottom = PLOT_MARGIN
    span_x = max(float(np.max(x) - np.min(x)), 1e-30)
    span_y = max(float(np.max(y) - np.min(y)), 1e-30)
    px = left + (x - np.min(x)) / span_x * (PLOT_WIDTH - left - right)
    py = (PLOT_HEIGHT - bottom) - (y - np.min(y)) / span_y \
        * (PLOT_HEIGHT - top - bottom)
    points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    axis_y = PLOT_HEIGHT - bottom
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_WIDTH}" '
        f'height="{PLOT_HEIGHT}" viewBox="0 0 {PLOT_WIDTH} {PLOT_HEIGHT}">',
        f'<line x1="{left:.0f}" y1="{axis_y:.0f}" x2="{PLOT_WIDTH - right:.0f}" '
        f'y2="{axis_y:.0f}" stroke="black"/>',
        f'<line x1="{left:.0f}" y1="{top:.0f}" x2="{left:.0f}" '
        f'y2="{axis_y:.0f}" stroke="black"/>',
        f'<polyline points="{points}" fill="none" stroke="#1f6fb2" '
        f'stroke-width="1.5"/>',
        f'<text x="{(left + PLOT_WIDTH - right) / 2:.0f}" '
        f'y="{PLOT_HEIGHT - 12:.0f}" text-anchor="middle" font-size="13">'
        f'{x_col}{" (log10)" if loglog else ""}</text>',
        f'<text x="16" y="{(top + axis_y) / 2:.0f}" font-size="13" '
        f'transform="rotate(-90 16 {(top + axis_y) / 2:.0f})" '
        f'text-anchor="middle">{y_col}{" (log10)" if loglog else ""}</text>',
        f'<text x="{left:.0f}" y="{axis_y + 16:.0f}" font-size="11">'
        f'{float(np.min(x)):.4g}</text>',
        f'<text x="{PLOT_WIDTH - right:.0f}" y="{axis_y + 16:.0f}" '
        f'text-anchor="end" font-size="11">{float(np.max(x)):.4g}</text>',
        f'<text x="{left - 6:.0f}" y="{axis_y:.0f}" text-anchor="end" '
        f'font-size="11">{float(np.min(y)):.4g}</text>',
        f'<text x="{left - 6:.0f}" y="{top + 10:.0f}" text-anchor="end" '
        f'font-size="11">{float(np.max(y)):.4g}</text>',
    ]
    if slope_label:
        parts.append(f'<text x="{PLOT_WIDTH - right - 4:.0f}" '
                     f'y="{top + 14:.0f}" text-anchor="end" font-size="13">'
                     f'{slope_label}</text>')
    parts.append("</svg>")
    out = Path(out_path) if out_path else csv_path.with_suffix(".svg")
    out.write_text("\n".join(parts) + "\n")
    return out


def _write_manifest(out_dir: Path, command: str, params: dict, seed: int,
                    outputs: list[Path], wall: float) -> Path:
    body = {
        "command": command,
        "params": {key: (str(v) if isinstance(v, Path) else v)
                   for key, v in sorted(params.items()) if key != "handler"},
        "seed": seed,
        "version": __version__,
        "wall_time_s": round(wall, 3),
        "outputs": [p.name for p in outputs],
    }
    path = out_dir / f"{command.replace('-', '_')}_manifest.json"
    path.write_text(json.dumps(body, indent=2, default=str) + "\n")
    return path


def _comma_ints(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, "
                                         f"got {text!r}")


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"cannot parse {text!r} as a number")


# ---------------------------------------------------------------- subcommands

def _run_spectrum(args) -> list[Path]:
    if args.k < 0 or args.d < 1 or args.nmax < 0:
        raise ValueError("need k >= 0, d >= 1, nmax >= 0")
    quad = jacobi_nodes(args.d, args.nmax + args.k + 16)
    rows = []
    for n in range(args.nmax + 1):
        structural_zero = False
        if 1 <= n <= args.k:
            closed_val = math.nan    # no closed form inside 1..k
        else:
            closed = sigma_hat_closed(args.k, args.d, n)
            structural_zero = isinstance(closed, ZeroTag)
            closed_val = float(closed)
        quad_val = sigma_hat_quad(args.k, args.d, n, quad)
        diff = abs(closed_val - quad_val) if math.isfinite(closed_val) else math.nan
        rows.append((n, closed_val, quad_val, diff, structural_zero))
    out = write_csv(args.out_dir / "spectrum.csv",
                    ("n", "closed", "quad", "abs_diff", "is_zero"), rows)
    return [out]


def _run_project(args) -> list[Path]:
    target = make_target(args.target, args.d, alpha=args.alpha, seed=args.seed)
    lifted = lift_to_sphere(target, args.k)
    rows = []
    for m in args.m_list:
        density = build_density(lifted, args.k, m)
        gamma_l2, gamma_l1 = variation_estimate(density)
        rows.append((m, sup_error(projection_on_ball(density), target, args.d),
                     gamma_l2, gamma_l1))
    out = write_csv(args.out_dir / "project.csv",
                    ("m", "sup_error", "gamma_l2", "gamma_l1"), rows)
    outputs = [out]
    if args.plot:
        outputs.append(emit_plot(out, "m", "sup_error"))
    return outputs


def _run_approx_sweep(args) -> list[Path]:
    target = make_target(args.target, args.d, alpha=args.alpha, seed=args.seed)
    if args.n_list is not None:
        if len(args.n_list) != len(args.m_list):
            raise ValueError("--n-list must match --m-list in length")
        schedule = list(zip(args.m_list, args.n_list))
    else:
        schedule = list(args.m_list)
    table = sweep_approx(target, args.k, args.d, schedule, trials=args.trials,
                         seed=args.seed, threads=args.threads)
    m_vals = table.column("m")
    err = table.column("sup_err_mean")
    rows = []
    for i, row in enumerate(table.rows()):
        slope_so_far = math.nan
        if i >= 1 and np.unique(m_vals[: i + 1]).size >= 2:
            slope_so_far = fit_slope(m_vals[: i + 1], err[: i + 1])[0]
        rows.append((*row, slope_so_far))
    out = write_csv(args.out_dir / "approx_sweep.csv",
                    ("m", "N", "M", "sup_err_mean", "sup_err_std",
                     "slope_so_far"), rows)
    outputs = [out]
    if args.plot:
        outputs.append(emit_plot(out, "m", "sup_err_mean"))
    return outputs


def _run_discretize(args) -> list[Path]:
    target = make_target(args.target, args.d, alpha=args.alpha, seed=args.seed)
    density = build_density(lift_to_sphere(target, args.k), args.k, args.m)
    net = discretize_mc(density, args.n_terms, seed=args.seed)
    net_path = args.out_dir / args.out
    net_path.write_text(write_net_text(net))
    gap = sup_error(lambda x: eval_shallow(net, x),
                    projection_on_ball(density), args.d)
    out = write_csv(args.out_dir / "discretize.csv",
                    ("n_terms", "variation", "sup_gap_vs_projection"),
                    [(net.n_units, net.variation, gap)])
    return [out, net_path]


def _run_cnn_compile(args) -> list[Path]:
    net = read_net_text(Path(args.input).read_text())
    if not isinstance(net, ShallowNet):
        raise ValueError("cnn-compile expects a shallow network file")
    if net.k != 1:
        raise ValueError(f"CNN compilation needs k = 1, got k = {net.k}")
    depth = args.L if args.L is not None else min_depth(net.n_units, net.d, args.s)
    filters, residual = factor_filter(stack_directions(net), args.s, depth)
    cnn = assemble_cnn(filters, net.v[:, :net.d], net.v[:, net.d], net.a, 0.0,
                       args.s)
    report = verify_equivalence(net, cnn, n_points=args.n_points,
                                seed=args.seed)
    cnn_path = args.out_dir / args.out
    cnn_path.write_text(write_net_text(cnn))
    out = write_csv(args.out_dir / "cnn_report.csv",
                    ("n_points", "max_gap", "mean_gap", "residual",
                     "param_count"),
                    [(report.n_points, report.max_gap, report.mean_gap,
                      residual, cnn.param_count)])
    return [out, cnn_path]


def _run_regress(args) -> list[Path]:
    alpha = float(args.alpha) if args.alpha is not None else None
    table = run_regression_sweep(args.family, args.class_tag, args.d, alpha,
                                 args.n_list, trials=args.trials,
                                 noise=args.noise, seed=args.seed,
                                 threads=args.threads,
                                 budget_override=args.budget)
    slope = table.meta.get("slope", math.nan)
    stderr = table.meta.get("slope_stderr", math.nan)
    rows = [(int(r[0]), int(r[1]), r[2], r[3], r[4], r[5],
             table.meta["predicted_exponent"], slope, stderr)
            for r in table.rows()]
    out = write_csv(args.out_dir / "regress.csv",
                    ("n", "N_or_W_or_L", "M", "B", "risk_mean", "risk_std",
                     "predicted_exponent", "fitted_slope", "slope_stderr"),
                    rows)
    outputs = [out]
    if args.plot:
        outputs.append(emit_plot(out, "n", "risk_mean"))
    return outputs


def _run_predict_rates(args) -> list[Path]:
    rows = []
    for family in FAMILIES:
        for class_tag in CLASS_TAGS:
            alpha = args.alpha if class_tag == "holder" else None
            approx = approx_rate(family, class_tag, args.d, alpha)
            budget = approx_budget_rate(family, class_tag, args.d, alpha)
            regression = predict_rate(family, class_tag, args.d, alpha)
            rows.append((family, class_tag, str(approx),
                         "" if budget is None else str(budget),
                         str(regression)))
    header = ("family", "class", "approx_exponent", "approx_budget_exponent",
              "regression_exponent")
    out = write_csv(args.out_dir / "predict_rates.csv", header, rows)
    print(",".join(header))
    for row in rows:
        print(",".join(fmt_value(v) for v in row))
    return [out]


# -------------------------------------------------------------------- parser

def _env_seed() -> int:
    raw = os.environ.get("RIDGELINE_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"RIDGELINE_SEED must be an integer, got {raw!r}")


def _build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="ridgeline",
        description="Ridge-function approximation and regression experiments")
    subs = parser.add_subparsers(dest="command", required=True)
    by_name = {}

    def add(name, handler, **kwargs):
        sub = subs.add_parser(name, **kwargs)
        sub.set_defaults(handler=handler)
        sub.add_argument("--out-dir", type=Path, default=Path("."),
                         help="directory for CSV/SVG/manifest outputs")
        sub.add_argument("--seed", type=int, default=None,
                         help="run seed (default: RIDGELINE_SEED or 0)")
        sub.add_argument("--threads", type=int, default=1)
        sub.add_argument("--config", type=Path, default=None,
                         help="plain 'key value' file; flags override it")
        by_name[name] = sub
        return sub

    sub = add("spectrum", _run_spectrum,
              help="activation spectrum table with structural-zero flags")
    sub.add_argument("--k", type=int, required=True)
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--nmax", type=int, required=True)

    sub = add("project", _run_project,
              help="smoothed projection error and variation per degree")
    sub.add_argument("--target", choices=TARGET_NAMES, required=True)
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--k", type=int, required=True)
    sub.add_argument("--m-list", type=_comma_ints, required=True)
    sub.add_argument("--alpha", type=float, default=1.0)
    sub.add_argument("--plot", action="store_true")

    sub = add("approx-sweep", _run_approx_sweep,
              help="sup-error sweep of Monte-Carlo discretized approximants")
    sub.add_argument("--target", choices=TARGET_NAMES, required=True)
    sub.add_argument("--k", type=int, required=True)
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--m-list", type=_comma_ints, required=True)
    sub.add_argument("--n-list", type=_comma_ints, default=None,
                     help="explicit unit counts; default balances from gamma")
    sub.add_argument("--trials", type=int, default=20)
    sub.add_argument("--alpha", type=float, default=1.0)
    sub.add_argument("--plot", action="store_true")

    sub = add("discretize", _run_discretize,
              help="sample one network from a ridge density and report gaps")
    sub.add_argument("--target", choices=TARGET_NAMES, required=True)
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--k", type=int, required=True)
    sub.add_argument("--m", type=int, required=True)
    sub.add_argument("--n-terms", type=int, required=True)
    sub.add_argument("--alpha", type=float, default=1.0)
    sub.add_argument("--out", default="net.txt")

    sub = add("cnn-compile", _run_cnn_compile,
              help="compile a shallow network file into an equivalent CNN")
    sub.add_argument("--input", required=True)
    sub.add_argument("--s", type=int, required=True)
    sub.add_argument("--L", type=int, default=None)
    sub.add_argument("--n-points", type=int, default=500)
    sub.add_argument("--out", default="compiled_net.txt")

    sub = add("regress", _run_regress,
              help="excess-risk sweep for one model family and target class")
    sub.add_argument("--family", choices=FAMILIES, required=True)
    sub.add_argument("--class", dest="class_tag", choices=CLASS_TAGS,
                     required=True)
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--alpha", type=float, default=None)
    sub.add_argument("--n-list", type=_comma_ints, required=True)
    sub.add_argument("--trials", type=int, default=20)
    sub.add_argument("--noise", type=float, default=0.5)
    sub.add_argument("--budget", type=float, default=None,
                     help="override the scheduled l1 budget")
    sub.add_argument("--plot", action="store_true")

    sub = add("predict-rates", _run_predict_rates,
              help="exact exponent grid for all families and classes")
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--alpha", type=_fraction, default=Fraction(1))

    return parser, by_name


def _apply_config(argv: list[str], by_name: dict) -> None:
    """Load 'key value' defaults for the invoked subcommand; flags still win."""
    if "--config" not in argv:
        return
    command = next((tok for tok in argv if not tok.startswith("-")), None)
    if command not in by_name:
        return
    path = Path(argv[argv.index("--config") + 1])
    sub = by_name[command]
    options = {act.dest: act for act in sub._actions}
    overrides = {}
    for line_no, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, raw = line.partition(" ")
        dest = key.replace("-", "_")
        if dest not in options:
            raise ValueError(f"{path}:{line_no}: unknown config key {key!r}")
        action = options[dest]
        raw = raw.strip()
        if isinstance(action, argparse._StoreTrueAction):
            overrides[dest] = raw.lower() in ("1", "true", "yes")
        else:
            overrides[dest] = action.type(raw) if action.type else raw
        if action.required:
            action.required = False
    sub.set_defaults(**overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, by_name = _build_parser()
    try:
        _apply_config(argv, by_name)
        args = parser.parse_args(argv)
        if args.seed is None:
            args.seed = _env_seed()
        if args.threads < 1:
            raise ValueError(f"need --threads >= 1, got {args.threads}")
        args.out_dir.mkdir(parents=True, exist_ok=True)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    start = time.perf_counter()
    try:
        outputs = args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    manifest = _write_manifest(args.out_dir, args.command, vars(args),
                               args.seed, outputs,
                               time.perf_counter() - start)
    for path in (*outputs, manifest):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

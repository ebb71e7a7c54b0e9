"""Command line interface.

Subcommands:

    gsisio run <config> [--steps N] [--seed S] [--csv PATH]
                         [--svg PREFIX] [--fig PREFIX]
    gsisio gains <config>
    gsisio montecarlo <config> --trials T [--seed S]
    gsisio example-sectionV [--out PATH]

Exit codes: 0 success, 2 configuration or parse error, 3 observer
existence condition failure, 4 runtime numeric error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from .affine_abstraction import SimplexInfeasibleError, SimplexUnboundedError
from .config import EXAMPLE_CONFIG, ConfigError, build_model, load_scenario
from .interval_core import EmptyIntersectionError
from .mixed_monotone import build_decomposition, lipschitz_like_constant
from .observer import ExistenceConditionError, FramerOrderError, synthesize_gains
from .simulate import monte_carlo, run_observer
from .report import emit_csv, emit_svg_plots, render_figures
from .stability import stability_report, width_bound_sequences

__all__ = ["main"]

_EXIT_OK = 0
_EXIT_CONFIG = 2
_EXIT_EXISTENCE = 3
_EXIT_NUMERIC = 4

_NUMERIC_ERRORS = (
    FramerOrderError,
    EmptyIntersectionError,
    SimplexInfeasibleError,
    SimplexUnboundedError,
    FloatingPointError,
    np.linalg.LinAlgError,
    ValueError,
    OSError,
)


def _fail(message: str, code: int) -> int:
    print(f"gsisio: error: {message}", file=sys.stderr)
    return code


def _matrix_lines(name: str, m: np.ndarray) -> list[str]:
    rows = [
        "  [" + ", ".join(f"{v: .10g}" for v in row) + "]"
        for row in np.atleast_2d(m)
    ]
    return [f"{name} ="] + rows


def _load(path: str, steps: int | None, seed: int | None):
    cfg = load_scenario(path)
    updates = {}
    if steps is not None:
        if steps < 1:
            raise ConfigError("--steps must be at least 1")
        updates["horizon"] = steps
    if seed is not None:
        updates["seed"] = seed
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    return cfg


def _cmd_run(args) -> int:
    try:
        cfg = _load(args.config, args.steps, args.seed)
    except ConfigError as exc:
        return _fail(str(exc), _EXIT_CONFIG)
    try:
        trace = run_observer(cfg)
    except ExistenceConditionError as exc:
        return _fail(str(exc), _EXIT_EXISTENCE)
    except _NUMERIC_ERRORS as exc:
        return _fail(f"numeric failure during run: {exc}", _EXIT_NUMERIC)

    wrote = []
    try:
        if args.csv:
            emit_csv(trace, args.csv)
            wrote.append(args.csv)
        if args.svg:
            wrote.extend(emit_svg_plots(trace, args.svg))
        if args.fig:
            wrote.extend(render_figures(trace, args.fig))
    except OSError as exc:
        return _fail(f"cannot write output: {exc}", _EXIT_NUMERIC)

    print(f"steps = {trace.horizon}")
    print(f"seed = {trace.truth.seed}")
    print(f"contraction constant = {trace.widths.cal_l:.6g}")
    print(f"final state width = {trace.width_x[-1]:.6g}")
    print(f"final state delta bound = {trace.delta_x[-1]:.6g}")
    print(f"final input width = {trace.width_d[-1]:.6g}")
    print(f"steady state width limit = {trace.widths.steady_state_limit:.6g}")
    for path in wrote:
        print(f"wrote {path}")
    return _EXIT_OK


def _cmd_gains(args) -> int:
    try:
        cfg = _load(args.config, None, None)
        model = build_model(cfg)
    except ConfigError as exc:
        return _fail(str(exc), _EXIT_CONFIG)
    except ExistenceConditionError as exc:
        return _fail(str(exc), _EXIT_EXISTENCE)
    except ValueError as exc:
        return _fail(str(exc), _EXIT_CONFIG)

    gains = synthesize_gains(model)
    l_fd = lipschitz_like_constant(build_decomposition(model.f))
    l_gd = lipschitz_like_constant(build_decomposition(model.g))
    report = stability_report(gains, l_fd, l_gd)
    lines = []
    lines += _matrix_lines("J", gains.j)
    lines += _matrix_lines("K", gains.k_gain)
    lines += _matrix_lines("L", gains.l_gain)
    lines.append(f"rank(I - K1 - L1) = {gains.rank_minus} (need {gains.n})")
    lines.append(f"rank(I - K1 + L1) = {gains.rank_plus} (need {gains.n})")
    lines.append(
        "existence condition: " + ("satisfied" if gains.existence_ok else "FAILS")
    )
    lines.append(f"L_fd = {l_fd:.6g}")
    lines.append(f"L_gd = {l_gd:.6g}")
    lines.append(f"norm(T_f) = {report.t_f_norm:.6g}")
    lines.append(f"norm(T_g) = {report.t_g_norm:.6g}")
    lines.append(f"contraction constant = {report.cal_l:.6g}")
    lines.append(
        "condition (i): " + ("holds" if report.condition_i_ok else "fails")
    )
    lines.append(
        "condition (ii): " + ("holds" if report.condition_ii_ok else "fails")
    )
    lines.append(
        "condition (iii): " + ("holds" if report.condition_iii_ok else "fails")
    )
    wb = width_bound_sequences(
        gains,
        report.t_f,
        report.t_g,
        l_fd,
        l_gd,
        model.w_bounds,
        model.v_bounds,
        delta0=float(np.linalg.norm(model.x0_bounds.width)),
        steps=1,
    )
    lines.append(f"steady state width limit = {wb.steady_state_limit:.6g}")
    lines.append(f"steady state width (scaled form) = {wb.steady_state_scaled:.6g}")
    lines.append(f"steady state input limit = {wb.steady_state_input:.6g}")
    print("\n".join(lines))
    return _EXIT_OK


def _cmd_montecarlo(args) -> int:
    try:
        cfg = _load(args.config, args.steps, None)
    except ConfigError as exc:
        return _fail(str(exc), _EXIT_CONFIG)
    try:
        summary = monte_carlo(cfg, trials=args.trials, base_seed=args.seed)
    except ExistenceConditionError as exc:
        return _fail(str(exc), _EXIT_EXISTENCE)
    except _NUMERIC_ERRORS as exc:
        return _fail(f"numeric failure during trials: {exc}", _EXIT_NUMERIC)
    print("\n".join(summary.lines()))
    return _EXIT_OK


def _cmd_example(args) -> int:
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(EXAMPLE_CONFIG)
        except OSError as exc:
            return _fail(f"cannot write {args.out!r}: {exc}", _EXIT_NUMERIC)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(EXAMPLE_CONFIG)
    return _EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsisio",
        description="Interval observer simulator for systems with unknown inputs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and run the observer")
    p_run.add_argument("config", help="scenario configuration file")
    p_run.add_argument("--steps", type=int, default=None, help="override horizon")
    p_run.add_argument("--seed", type=int, default=None, help="override RNG seed")
    p_run.add_argument("--csv", default=None, help="write the trace CSV here")
    p_run.add_argument("--svg", default=None, help="prefix for SVG charts")
    p_run.add_argument("--fig", default=None, help="prefix for PNG figures")
    p_run.set_defaults(func=_cmd_run)

    p_gains = sub.add_parser("gains", help="print gains and stability diagnosis")
    p_gains.add_argument("config", help="scenario configuration file")
    p_gains.set_defaults(func=_cmd_gains)

    p_mc = sub.add_parser("montecarlo", help="repeated seeded trials")
    p_mc.add_argument("config", help="scenario configuration file")
    p_mc.add_argument("--trials", type=int, required=True)
    p_mc.add_argument("--seed", type=int, default=None, help="base seed")
    p_mc.add_argument("--steps", type=int, default=None, help="override horizon")
    p_mc.set_defaults(func=_cmd_montecarlo)

    p_ex = sub.add_parser(
        "example-sectionV", help="emit the bundled example scenario"
    )
    p_ex.add_argument("--out", default=None, help="write to a file instead of stdout")
    p_ex.set_defaults(func=_cmd_example)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

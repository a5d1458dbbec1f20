"""Command-line entry points: simulate, compare, validate.

Exit codes: 0 success, 2 invalid configuration, 3 solver infeasibility
terminated the run, 4 the observer uncertainty lost definiteness.  The
metrics summary goes to stdout; progress and diagnostics go to stderr and are
suppressed by --quiet.  When --out is omitted, runs land under the directory
named by the COSAFE_OUT_ROOT environment variable (default ./runs).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import (build_episode_config, build_error_constants,
                     build_safety_spec, parse_config_file, resolve_config,
                     serialize_config)
from .defaults import OUTPUT_ROOT_ENV
from .errors import ConfigError
from .runio import (format_metrics, write_comparison_csv, write_metrics,
                    write_trajectory_csv)
from .safety import validate_initial_conditions
from .sim import compute_metrics, run_episode

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_BAD_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_LOST_DEFINITENESS = 4


def _info(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _resolved_from_args(args) -> dict:
    file_values = parse_config_file(args.config) if args.config else None
    overrides = {
        "c1": args.c1,
        "seed": args.seed,
        "dt_int": args.dt_int,
        "dt_ctrl": args.dt_ctrl,
        "t_final": args.t_final,
    }
    return resolve_config(file_values, overrides, example=args.example)


def _out_dir(out_arg, default_name: str) -> Path:
    if out_arg is not None:
        return Path(out_arg)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    return root / default_name


def _run_name(resolved: dict) -> str:
    return (f"{resolved['example']}-c1_{resolved['c1']:g}"
            f"-seed_{resolved['seed']}")


def _error_exit_code(error: str | None) -> int:
    if error is None:
        return EXIT_OK
    if error.startswith("InfeasibleCBF"):
        return EXIT_INFEASIBLE
    if error.startswith("NotPositiveDefinite"):
        return EXIT_LOST_DEFINITENESS
    return 1


def _write_run(resolved: dict, out: Path, args) -> int:
    episode = build_episode_config(resolved)
    log = run_episode(episode)
    metrics = compute_metrics(log)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(log, out / "trajectory.csv")
    write_metrics(metrics, out / "metrics.txt")
    (out / "config.resolved").write_text(serialize_config(resolved),
                                         encoding="utf-8")
    _info(args, f"wrote {out}/trajectory.csv ({log.t.shape[0]} rows)")
    if log.error:
        _info(args, f"episode ended early: {log.error}")
    sys.stdout.write(format_metrics(metrics))
    return _error_exit_code(log.error)


def cmd_simulate(args) -> int:
    try:
        resolved = _resolved_from_args(args)
        out = _out_dir(args.out, _run_name(resolved))
        return _write_run(resolved, out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


def cmd_compare(args) -> int:
    try:
        file_values = parse_config_file(args.config) if args.config else None
        base = resolve_config(file_values, {"t_final": args.t_final},
                              example=args.example)
        out = _out_dir(args.out, f"{base['example']}-compare")
        out.mkdir(parents=True, exist_ok=True)
        rows = []
        for c1 in args.c1:
            for seed in args.seeds:
                resolved = dict(base)
                resolved["c1"] = float(c1)
                resolved["seed"] = int(seed)
                name = f"c1_{float(c1):g}_seed_{int(seed)}"
                run_dir = out / name
                run_dir.mkdir(parents=True, exist_ok=True)
                episode = build_episode_config(resolved)
                log = run_episode(episode)
                metrics = compute_metrics(log)
                write_trajectory_csv(log, run_dir / "trajectory.csv")
                write_metrics(metrics, run_dir / "metrics.txt")
                (run_dir / "config.resolved").write_text(
                    serialize_config(resolved), encoding="utf-8")
                rows.append({
                    "run": name,
                    "c1": float(c1),
                    "seed": int(seed),
                    "status": log.error if log.error else "ok",
                    "min_h_true": metrics["min_h_true"],
                    "final_est_error": metrics["final_est_error"],
                    "final_eig_p_max": metrics["final_eig_p_max"],
                    "max_u_inf": metrics["max_u_inf"],
                    "goal_reached": metrics.get("goal_reached"),
                })
                _info(args, f"finished {name}"
                      + (f" ({log.error})" if log.error else ""))
        write_comparison_csv(rows, out / "comparison.csv")
        sys.stdout.write((out / "comparison.csv").read_text(encoding="utf-8"))
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


def cmd_validate(args) -> int:
    try:
        file_values = parse_config_file(args.config) if args.config else None
        resolved = resolve_config(file_values, {}, example=args.example)
        episode = build_episode_config(resolved)
        constants = build_error_constants(resolved)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    if constants is None:
        sys.stdout.write("advisory checks skipped: error-bound constants "
                         "are not set\n")
        return EXIT_OK
    report = validate_initial_conditions(constants, build_safety_spec(resolved),
                                         episode.x0, episode.xhat0)
    lines = [
        f"initial_error_norm = {report.error_norm:.17g}",
        f"error_bound = {report.error_bound:.17g}",
        f"error_radius = {report.error_radius:.17g}",
        f"error_ok = {'true' if report.error_ok else 'false'}",
        f"barrier_value = {report.barrier_value:.17g}",
        f"barrier_required = {report.barrier_required:.17g}",
        f"barrier_ok = {'true' if report.barrier_ok else 'false'}",
        f"passed = {'true' if report.passed else 'false'}",
    ]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if report.passed else EXIT_VALIDATION_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cosafe",
        description="Closed-loop studies of confidence-aware safe control.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--example", choices=["second-order", "unicycle"],
                       help="system preset (may also come from the config file)")
        p.add_argument("--config", help="flat key-value config file")
        p.add_argument("--out", help="output directory (default: "
                       f"$${OUTPUT_ROOT_ENV}/<run name>)")
        p.add_argument("--t-final", dest="t_final", type=float,
                       help="override the episode horizon")
        p.add_argument("--quiet", action="store_true",
                       help="suppress stderr diagnostics")

    sim = sub.add_parser("simulate", help="run one episode into a run directory")
    common(sim)
    sim.add_argument("--c1", type=float, help="override the confidence weight")
    sim.add_argument("--seed", type=int, help="override the episode seed")
    sim.add_argument("--dt-int", dest="dt_int", type=float,
                     help="override the integration step")
    sim.add_argument("--dt-ctrl", dest="dt_ctrl", type=float,
                     help="override the control period")
    sim.set_defaults(func=cmd_simulate)

    cmp_ = sub.add_parser("compare",
                          help="run a c1 x seed sweep and tabulate outcomes")
    common(cmp_)
    cmp_.add_argument("--c1", type=float, nargs="+", default=[0.0, 1000.0],
                      help="confidence weights to sweep (default: 0 1000)")
    cmp_.add_argument("--seeds", type=int, nargs="+", default=[0],
                      help="episode seeds to sweep (default: 0)")
    cmp_.set_defaults(func=cmd_compare)

    val = sub.add_parser("validate",
                         help="check initial conditions against the error-bound sets")
    val.add_argument("--example", choices=["second-order", "unicycle"])
    val.add_argument("--config", help="flat key-value config file")
    val.add_argument("--quiet", action="store_true")
    val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: run experiments, search seeds, print bounds.

Output files are written once, by this process, after every run in the
experiment has finished; a failed invocation leaves no partial CSV.
Floats are rendered with 17 significant digits and a ``.`` decimal
separator regardless of locale, so reruns with the same config and
master seed produce byte-identical file bodies.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .config import load_config
from .errors import CapacityError, ConfigError, ParseError, VqaLabError
from .experiments import (SUMMARY_COLUMNS, TRAJECTORY_COLUMNS,
                          build_layout_and_observable, find_trapped_seeds,
                          run_experiment)
from .optimizer import smoothness_bounds

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_ALL_FAILED = 4


def _fmt(value) -> str:
    """One CSV cell; floats at 17 significant digits, None empty."""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def _write_csv(path: str, columns: tuple[str, ...], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _jsonable(obj):
    """Recursively convert numpy scalars and arrays for json.dumps."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _cmd_run(args) -> int:
    config = load_config(args.config)
    result = run_experiment(config, jobs=args.jobs)
    out_dir = args.out or config.output_dir or "vqa-lab-out"
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(os.path.join(out_dir, "trajectories.csv"),
               TRAJECTORY_COLUMNS, result.trajectory_rows)
    _write_csv(os.path.join(out_dir, "summary.csv"),
               SUMMARY_COLUMNS, result.summary_rows)
    echo = config.echo_dict()
    echo["output_dir"] = out_dir
    with open(os.path.join(out_dir, "config-echo.json"), "w",
              encoding="utf-8") as fh:
        json.dump(_jsonable(echo), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(_jsonable(result.notes), indent=2, sort_keys=True))
    if result.n_runs > 0 and result.n_failed == result.n_runs:
        print(f"all {result.n_runs} runs failed", file=sys.stderr)
        return EXIT_ALL_FAILED
    return EXIT_OK


def _cmd_seeds(args) -> int:
    config = load_config(args.config)
    layout, h = build_layout_and_observable(config)
    base = replace(config.optimizer, method="gd", r=0.0, n_shots=None, q=0.0)
    # same search the run command performs for theta0 mode "trapped"
    seeds = find_trapped_seeds(layout, h, base, config.theta0.n_candidates,
                               config.master_seed)
    if config.theta0.max_seeds is not None:
        seeds = seeds[:config.theta0.max_seeds]
    payload = [{
        "theta0": s.theta0.tolist(),
        "saddle_theta": s.saddle_theta.tolist(),
        "saddle_loss": s.saddle_loss,
        "lambda_min": s.lambda_min,
        "grad_norm": s.grad_norm,
    } for s in seeds]
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def _cmd_bounds(args) -> int:
    config = load_config(args.config)
    layout, h = build_layout_and_observable(config)
    bounds = smoothness_bounds(layout, h)
    print(json.dumps({
        "beta": bounds.beta,
        "rho": bounds.rho,
        "eta_rec": bounds.eta_recommended,
    }, indent=2))
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqa-lab",
        description="Deterministic noisy-optimization experiments on "
                    "parameterized quantum circuits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("config", help="path to a JSON experiment config")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="max concurrent runs (default 1)")
    p_run.add_argument("--out", default=None,
                       help="output directory (overrides config output_dir)")
    p_run.set_defaults(func=_cmd_run)

    p_seeds = sub.add_parser(
        "seeds", help="search for trapped initializations, print them as JSON")
    p_seeds.add_argument("config", help="path to a JSON experiment config")
    p_seeds.set_defaults(func=_cmd_seeds)

    p_bounds = sub.add_parser(
        "bounds", help="print smoothness bounds for the configured problem")
    p_bounds.add_argument("config", help="path to a JSON experiment config")
    p_bounds.set_defaults(func=_cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except VqaLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_FAILED


if __name__ == "__main__":
    sys.exit(main())

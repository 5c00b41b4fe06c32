"""Command-line entry points: train, eval, sweep, viz, and oracle-check.

Every failure path prints a single machine-parseable line starting with
"error:" on stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .evaluation import export_traces, run_eval, sweep, write_report
from .models import load_model
from .oracles import run_oracle_suite
from .sensing import PRESET_LABELS, LabelError, parse_lidar_label
from .training import TrainConfig, resolve_scenarios, train_loop
from .world import RobotState, Scenario, builtin_scenario, load_scenario


class CliError(RuntimeError):
    pass


def _load_scenario_arg(value: str) -> Scenario:
    path = Path(value)
    if path.suffix == ".json":
        if not path.exists():
            raise CliError(f"--scenario: file not found: {value}")
        return load_scenario(path)
    try:
        return builtin_scenario(value)
    except FileNotFoundError as exc:
        raise CliError(f"--scenario: {exc}") from exc


def _load_model_arg(value: str):
    path = Path(value)
    if not path.exists():
        raise CliError(f"--model: file not found: {value}")
    return load_model(path)


def _cmd_train(args) -> int:
    config_path = Path(args.config)
    if not config_path.exists():
        raise CliError(f"--config: file not found: {args.config}")
    cfg = TrainConfig.from_json(config_path)
    result = train_loop(cfg, seed=args.seed, out_dir=args.out, resume_from=args.resume,
                        progress=_print_progress if args.verbose else None)
    print(f"trained {result.steps} steps over {result.episodes} episodes; "
          f"checkpoints in {args.out}")
    return 0


def _print_progress(step: int, record: dict) -> None:
    print(f"[{step}] {record['env']}: success {record['success_rate']:.2f} "
          f"score {record['score_mean']:.3f}", flush=True)


def _cmd_eval(args) -> int:
    model = _load_model_arg(args.model)
    scenario = _load_scenario_arg(args.scenario)
    try:
        lidar = parse_lidar_label(args.lidar)
    except LabelError as exc:
        raise CliError(f"--lidar: {exc}") from exc
    trace_every = args.trace_every if args.trace_out else 0
    report, traces = run_eval(model, scenario, lidar, n_tasks=args.tasks,
                              seed=args.seed, trace_every=trace_every)
    rows = [report.to_dict()]
    if args.report:
        write_report(rows, args.report)
    print(json.dumps(rows[0]))
    if args.trace_out:
        traced = [t for t in traces if t.steps]
        if traced:
            export_traces(traced, args.trace_out, scenario=scenario)
    return 0


def _cmd_sweep(args) -> int:
    model = _load_model_arg(args.model)
    labels = [l.strip() for l in args.lidars.split(",") if l.strip()]
    if not labels:
        raise CliError("--lidars: no labels given")
    for label in labels:
        try:
            parse_lidar_label(label)
        except LabelError as exc:
            raise CliError(f"--lidars: {exc}") from exc
    scenario_dir = Path(args.scenarios)
    if scenario_dir.is_dir():
        files = sorted(scenario_dir.glob("*.json"))
        if not files:
            raise CliError(f"--scenarios: no scenario json files in {args.scenarios}")
        scenarios = [load_scenario(f) for f in files]
    else:
        scenarios = [_load_scenario_arg(s) for s in args.scenarios.split(",")]
    rows = sweep(model, labels, scenarios, n_tasks=args.tasks, seed=args.seed)
    if args.report:
        write_report(rows, args.report)
    for row in rows:
        print(json.dumps(row))
    return 0


def _cmd_viz(args) -> int:
    model = _load_model_arg(args.model)
    scenario = _load_scenario_arg(args.scenario)
    lidar = parse_lidar_label(args.lidar)
    try:
        gx, gy = (float(v) for v in args.goal.split(","))
    except ValueError as exc:
        raise CliError(f"--goal: expected X,Y, got {args.goal!r}") from exc
    if args.start:
        try:
            sx, sy, sth = (float(v) for v in args.start.split(","))
        except ValueError as exc:
            raise CliError(f"--start: expected X,Y,THETA, got {args.start!r}") from exc
        start = RobotState(sx, sy, sth)
    elif scenario.eval_tasks:
        start = RobotState(*scenario.eval_tasks[0].start)
    else:
        xmin, ymin, xmax, ymax = scenario.bounds
        start = RobotState((xmin + xmax) / 2.0, (ymin + ymax) / 2.0, 0.0)
    tasks = [(start, np.array([gx, gy]))]
    report, traces = run_eval(model, scenario, lidar, tasks=tasks,
                              trace_every=args.trace_every)
    files = export_traces(traces, args.trace_out, scenario=scenario)
    print(json.dumps({"outcome": report.to_dict(), "files": [str(f) for f in files]}))
    return 0


def _cmd_oracle_check(args) -> int:
    results = run_oracle_suite(quick=args.quick, seed=args.seed)
    failed = 0
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"[{mark}] {r.name}: {r.detail}")
        failed += 0 if r.passed else 1
    if failed:
        print(f"error: {failed} oracle suite(s) failed", file=sys.stderr)
        return 1
    print(f"all {len(results)} oracle suites passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="supportnav",
        description="Point-set navigation: simulator, training, and cross-sensor evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a training configuration")
    p_train.add_argument("--config", required=True, help="training config JSON")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", required=True, help="output directory")
    p_train.add_argument("--resume", default=None, help="checkpoint directory to resume from")
    p_train.add_argument("--verbose", action="store_true")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a model in one scenario")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--scenario", required=True, help="builtin name or JSON path")
    p_eval.add_argument("--lidar", default="360|0.33|5|0",
                        help=f"setup label, e.g. one of {PRESET_LABELS}")
    p_eval.add_argument("--tasks", type=int, default=100)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--report", default=None, help="write the report JSON here")
    p_eval.add_argument("--trace-out", default=None)
    p_eval.add_argument("--trace-every", type=int, default=20)
    p_eval.set_defaults(func=_cmd_eval)

    p_sweep = sub.add_parser("sweep", help="evaluate across sensor labels x scenarios")
    p_sweep.add_argument("--model", required=True)
    p_sweep.add_argument("--lidars", required=True, help="comma-separated setup labels")
    p_sweep.add_argument("--scenarios", required=True,
                         help="directory of scenario JSON files, or comma-separated names")
    p_sweep.add_argument("--tasks", type=int, default=100)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--report", default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_viz = sub.add_parser("viz", help="trace one episode and export CSV + SVG")
    p_viz.add_argument("--model", required=True)
    p_viz.add_argument("--scenario", required=True)
    p_viz.add_argument("--goal", required=True, help="X,Y")
    p_viz.add_argument("--start", default=None, help="X,Y,THETA")
    p_viz.add_argument("--lidar", default="360|0.33|5|0")
    p_viz.add_argument("--trace-every", type=int, default=20)
    p_viz.add_argument("--trace-out", required=True)
    p_viz.set_defaults(func=_cmd_viz)

    p_oracle = sub.add_parser("oracle-check", help="run the independent-oracle suites")
    p_oracle.add_argument("--quick", action="store_true", help="reduced trial counts")
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.set_defaults(func=_cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError, LabelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands: ``train`` (run a campaign), ``evaluate`` (exploit-mode episodes
from a checkpoint), ``report`` (comparison summary + figures from stored
records), ``oracle`` (grid-search a static scenario), and
``validate-config``. Exit codes: 0 success, 1 configuration error, 2 runtime
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_experiment_config
from .env import SystemConfig
from .harness import (
    OracleIntractable,
    StaticScenario,
    compare_report,
    emit_plots,
    evaluate_checkpoint,
    grid_search_oracle,
    load_records,
    run_campaign,
)
from .physics import Position3D


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; bad flags are config
    # errors here (exit 1), so route them through ConfigError instead
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pinchisac",
                     description="Pinching-antenna ISAC simulation and training")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None,
                       help="config file (defaults to built-in values)")
        p.add_argument("--out", type=str, default=None,
                       help="output directory override")

    p_train = sub.add_parser("train", help="run a training campaign")
    common(p_train)
    p_train.add_argument("--seed", type=int, default=None,
                         help="replace the configured seed list with one seed")
    p_train.add_argument("--algorithms", type=str, default=None,
                         help="comma-separated algorithm list override")
    p_train.add_argument("--episodes", type=int, default=None)
    p_train.add_argument("--fresh", action="store_true",
                         help="ignore existing completed runs instead of reusing them")
    p_train.add_argument("--workers", type=int, default=1,
                         help="run campaign tuples in this many parallel processes")

    p_eval = sub.add_parser("evaluate", help="run exploit episodes from a checkpoint")
    common(p_eval)
    p_eval.add_argument("--checkpoint", type=str, required=True)
    p_eval.add_argument("--episodes", type=int, default=10)
    p_eval.add_argument("--seed", type=int, default=0)

    p_report = sub.add_parser("report", help="build comparison report and figures")
    common(p_report)

    p_oracle = sub.add_parser("oracle", help="grid-search a static scenario")
    common(p_oracle)
    p_oracle.add_argument("--user", type=str, required=True,
                          help="user position as X,Y meters")
    p_oracle.add_argument("--target", type=str, default=None,
                          help="target position as X,Y meters (optional)")
    p_oracle.add_argument("--resolution", type=float, default=1.0,
                          help="grid resolution in meters")
    p_oracle.add_argument("--power-levels", type=int, default=11)
    p_oracle.add_argument("--no-snr-constraint", action="store_true")

    p_val = sub.add_parser("validate-config", help="parse and validate a config file")
    common(p_val)
    return parser


def _overrides(args) -> dict[str, str]:
    overrides: dict[str, str] = {}
    if getattr(args, "out", None):
        overrides["output.out_dir"] = args.out
    if getattr(args, "episodes", None) is not None and args.command == "train":
        overrides["training.episodes"] = str(args.episodes)
    if getattr(args, "algorithms", None):
        overrides["training.algorithms"] = args.algorithms
    if args.command == "train" and getattr(args, "seed", None) is not None:
        overrides["training.seeds"] = str(args.seed)
    return overrides


def _parse_xy(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"expected X,Y coordinates, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"bad coordinates {text!r}") from None


def _cmd_train(args) -> int:
    exp = load_experiment_config(args.config, _overrides(args))
    records = run_campaign(exp, resume=not args.fresh, workers=args.workers,
                           log=lambda msg: print(msg, flush=True))
    failed = [r for r in records if r.status != "completed"]
    for record in records:
        print(f"{record.key.name}: {record.status} "
              f"({record.train['episode'].size} episodes logged)")
    if failed:
        print(f"{len(failed)} run(s) failed", file=sys.stderr)
        return 2
    return 0


def _cmd_evaluate(args) -> int:
    exp = load_experiment_config(args.config, _overrides(args))
    result = evaluate_checkpoint(exp, args.checkpoint, episodes=args.episodes,
                                 seed=args.seed)
    print(json.dumps(result, indent=2))
    return 0


def _cmd_report(args) -> int:
    exp = load_experiment_config(args.config, _overrides(args))
    records = load_records(exp.out_dir)
    text, data = compare_report(records, exp)
    report_dir = Path(exp.out_dir)
    (report_dir / "report.txt").write_text(text)
    (report_dir / "report.json").write_text(json.dumps(data, indent=2))
    created = emit_plots(records, exp)
    print(text)
    print(f"wrote {report_dir / 'report.txt'}, {report_dir / 'report.json'}")
    for path in created:
        print(f"wrote {path}")
    return 0


def _cmd_oracle(args) -> int:
    exp = load_experiment_config(args.config, _overrides(args))
    ux, uy = _parse_xy(args.user)
    target = None
    if args.target:
        tx, ty = _parse_xy(args.target)
        target = Position3D(tx, ty, 0.0)
    scenario = StaticScenario(
        user=Position3D(ux, uy, 0.0),
        target=target,
        enforce_snr_constraint=not args.no_snr_constraint,
    )
    result = grid_search_oracle(scenario, exp.system, args.resolution,
                                power_levels=args.power_levels)
    print(json.dumps({
        "antenna_xs_m": list(result.layout.xs),
        "power_w": result.power_w,
        "rate_bits_s_hz": result.rate,
        "snr_linear": result.snr_linear,
        "evaluations": result.evaluations,
    }, indent=2))
    return 0


def _cmd_validate(args) -> int:
    exp = load_experiment_config(args.config, _overrides(args))
    print(f"config OK (hash {exp.config_hash()}): "
          f"{len(exp.algorithms)} algorithm(s), {len(exp.seeds)} seed(s), "
          f"{exp.episodes} episodes, output -> {exp.out_dir}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
    "oracle": _cmd_oracle,
    "validate-config": _cmd_validate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OracleIntractable as exc:
        print(f"oracle refused: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

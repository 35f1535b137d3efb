"""argparse front end: run scenarios, presets, equilibria, ensembles.

Exit codes: 0 success, 2 configuration problem, 3 numerical failure,
4 output/filesystem failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .config import PRESET_IDS, ScenarioConfig, figure_preset, load_config
from .errors import ConfigurationError, MarketError, OutputError
from .runner import run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument(
        "--t-end",
        type=float,
        default=None,
        help="override the end time; phase1_end is clamped down to it if needed",
    )
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument(
        "--summary",
        action="store_true",
        help="print a one-line verdict: terminal price, predicted limit, drift",
    )


def _apply_overrides(config: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigurationError([f"--seed must lie in [0, 2**64), got {args.seed}"])
        config = replace(config, seed=args.seed)
    if args.t_end is not None:
        if args.t_end < 0.0:
            raise ConfigurationError([f"--t-end must be nonnegative, got {args.t_end}"])
        config = replace(
            config, t_end=args.t_end, phase1_end=min(config.phase1_end, args.t_end)
        )
    if args.out is not None:
        config = replace(config, out_dir=args.out)
    return config


def _finish_run(config: ScenarioConfig, args: argparse.Namespace) -> None:
    summary = run_scenario(config)
    if args.summary:
        print(summary.line())
    elif summary.series_path is not None:
        print(summary.series_path)


def _cmd_run(args: argparse.Namespace) -> None:
    _finish_run(_apply_overrides(load_config(args.config), args), args)


def _cmd_preset(args: argparse.Namespace) -> None:
    config = _apply_overrides(figure_preset(args.id), args)
    if args.dump_config is not None:
        with open(args.dump_config, "w", encoding="utf-8") as fh:
            json.dump(config.to_json_dict(), fh, indent=2)
            fh.write("\n")
        print(args.dump_config)
        return
    _finish_run(config, args)


def _cmd_equilibrium(args: argparse.Namespace) -> None:
    config = load_config(args.config)
    summary = run_scenario(replace(config, model="equilibrium"), write_outputs=False)
    eq = summary.equilibrium
    means = eq.limit_means
    print(f"rho = {eq.rho:.12g}")
    print(f"limit_price = {eq.limit_price:.12g}")
    print(
        f"limit_means: Mx = {means.Mx:.12g}, My = {means.My:.12g}, "
        f"mx = {means.mx:.12g}, my = {means.my:.12g}"
    )
    print(f"iterations = {eq.iterations}")


def _cmd_ensemble(args: argparse.Namespace) -> None:
    if args.replicas < 1:
        raise ConfigurationError([f"--replicas must be at least 1, got {args.replicas}"])
    config = _apply_overrides(load_config(args.config), args)
    for replica in range(args.replicas):
        summary = run_scenario(replace(config, seed=config.seed + replica))
        if args.summary:
            print(summary.line())
        elif summary.series_path is not None:
            print(summary.series_path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kinmarket",
        description="Kinetic dealer/speculator goods-exchange market simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario from a JSON config")
    p_run.add_argument("config", help="path to the scenario JSON")
    _add_common_flags(p_run)
    p_run.set_defaults(handler=_cmd_run)

    p_preset = sub.add_parser("preset", help="run a bundled figure scenario")
    p_preset.add_argument("id", help=f"one of: {', '.join(PRESET_IDS)}")
    _add_common_flags(p_preset)
    p_preset.add_argument(
        "--dump-config",
        default=None,
        metavar="PATH",
        help="write the preset's JSON config instead of running it",
    )
    p_preset.set_defaults(handler=_cmd_preset)

    p_eq = sub.add_parser(
        "equilibrium", help="print the equilibrium share and limit price of a scenario"
    )
    p_eq.add_argument("config", help="path to the scenario JSON")
    p_eq.set_defaults(handler=_cmd_equilibrium)

    p_ens = sub.add_parser("ensemble", help="run seed, seed+1, ... seed+R-1")
    p_ens.add_argument("config", help="path to the scenario JSON")
    p_ens.add_argument("--replicas", type=int, required=True, metavar="R")
    _add_common_flags(p_ens)
    p_ens.set_defaults(handler=_cmd_ensemble)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.handler(args)
    except ConfigurationError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MarketError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

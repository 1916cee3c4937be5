"""Command-line entry point.

Subcommands::

    trimkf run --config CFG.json [--seed N] [--out DIR] [--replicates N] [--threads N]
    trimkf validate --config CFG.json
    trimkf list-scenarios

Exit codes: 0 all good (including any embedded oracle checks), 1 config
error, 2 runtime failure (a crash or failed replicates), 3 an embedded
acceptance check failed.
"""

from __future__ import annotations

import argparse
import sys
import time

from .. import __version__
from .config import ConfigError, load_config_file, validate_config
from .io import write_metadata
from .scenarios import SCENARIOS, run_scenario

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_CHECK_FAILED = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trimkf",
        description="Sequential data-assimilation experiments (EnKF / trimmed EnKF / PF)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a configured scenario")
    run_p.add_argument("--config", required=True, help="path to a JSON config or metadata file")
    run_p.add_argument("--seed", type=int, default=None, help="override the master seed")
    run_p.add_argument("--out", default=None, help="override the output directory")
    run_p.add_argument("--replicates", type=int, default=None, help="override replicate count")
    run_p.add_argument("--threads", type=int, default=None, help="worker threads (0 = auto)")

    val_p = sub.add_parser("validate", help="validate a config file and echo the resolved values")
    val_p.add_argument("--config", required=True, help="path to a JSON config file")

    sub.add_parser("list-scenarios", help="list available scenarios")
    return parser


def _apply_cli_overrides(raw: dict, args) -> dict:
    if "config" in raw and "scenario" not in raw:
        raw = dict(raw["config"])
    else:
        raw = dict(raw)
    for cli_key, cfg_key in (
        ("seed", "seed"),
        ("out", "out_dir"),
        ("replicates", "replicates"),
        ("threads", "threads"),
    ):
        value = getattr(args, cli_key, None)
        if value is not None:
            raw[cfg_key] = value
    return raw


def _cmd_run(args) -> int:
    try:
        raw = _apply_cli_overrides(load_config_file(args.config), args)
        cfg = validate_config(raw)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    start = time.perf_counter()
    try:
        result = run_scenario(cfg)
    except Exception as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    wall = time.perf_counter() - start

    write_metadata(
        cfg.out_dir, cfg, __version__, wall, result.replicate_failures, result.checks
    )
    for f in result.files:
        print(f"wrote {f}")
    print(f"wrote {cfg.out_dir}/metadata.json")

    if result.replicate_failures:
        for failure in result.replicate_failures:
            print(f"FAILED {failure}", file=sys.stderr)
        return EXIT_RUNTIME
    if result.checks is not None:
        for c in result.checks:
            status = "pass" if c["ok"] else "FAIL"
            print(f"{status}: {c['check']} (value={c['value']:.6g}, tol={c['tolerance']:.6g})")
        if not result.checks_passed:
            return EXIT_CHECK_FAILED
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        cfg = validate_config(load_config_file(args.config))
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"scenario:   {cfg.scenario}")
    print(f"seed:       {cfg.seed}")
    print(f"out_dir:    {cfg.out_dir}")
    print(f"replicates: {cfg.replicates}")
    print(f"threads:    {cfg.threads}")
    print(f"overrides:  {', '.join(cfg.overrides) if cfg.overrides else '(none)'}")
    for key in sorted(cfg.params):
        print(f"params.{key} = {cfg.params[key]}")
    return EXIT_OK


def _cmd_list(_args) -> int:
    width = max(len(name) for name in SCENARIOS)
    for name in sorted(SCENARIOS):
        print(f"{name:<{width}}  {SCENARIOS[name][1]}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "run": _cmd_run,
        "validate": _cmd_validate,
        "list-scenarios": _cmd_list,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())

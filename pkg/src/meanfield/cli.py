"""Command-line entry point: ``meanfield run|list|validate``.

Exit codes: 0 success, 1 a declared assertion failed, 2 unknown scenario,
3 configuration error (the field path is printed), 4 numerical failure.
"""
from __future__ import annotations

import argparse
import sys

from .config import load_config, merge, validate
from .errors import ConfigError, DomainError, NumericalError
from .scenarios import SCENARIOS, UnknownScenario, list_scenarios, run_scenario

EXIT_OK, EXIT_ASSERT, EXIT_UNKNOWN, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="meanfield", description="Mean-field analysis of random delayed rate networks.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario preset or a YAML config")
    run.add_argument("scenario", help="preset name or path to a YAML config")
    run.add_argument("--out", default="out", help="output directory (default: %(default)s)")
    run.add_argument("--seed", type=int, default=None, help="master seed")
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config entry, e.g. sigma=0 or network.horizon=10 (repeatable)")
    run.add_argument("--paper-scale", action="store_true", help="use full network sizes")
    sub.add_parser("list", help="list scenario presets")
    val = sub.add_parser("validate", help="check a YAML config without running it")
    val.add_argument("config")
    return ap


def _cmd_run(args) -> int:
    status, manifest = run_scenario(args.scenario, args.out, seed=args.seed, overrides=args.overrides,
                                    paper_scale=args.paper_scale)
    for name, ok in manifest["assertions"].items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(f"wrote {len(manifest['files'])} files and manifest.json to {args.out}")
    return status


def _cmd_list() -> int:
    for name, desc, figure in list_scenarios():
        print(f"{name}\n    {desc}\n    mirrors: {figure}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    tree = load_config(args.config)
    name = tree.get("scenario")
    if name is not None and name not in SCENARIOS:
        raise UnknownScenario(f"config names unknown scenario {name!r}")
    if name is not None:
        tree = merge(SCENARIOS[name].defaults, {k: v for k, v in tree.items() if k != "scenario"})
    params, net = validate(tree)
    print(f"ok: {params.M} population(s)" + ("" if net is None else f", {net.n_total} neurons, {net.n_steps} steps"))
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "list":
            return _cmd_list()
        return _cmd_validate(args)
    except UnknownScenario as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    except ConfigError as exc:
        print(f"config error at {exc.field or '<unknown>'}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, DomainError) as exc:
        print(f"numerical error in {type(exc).__module__}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

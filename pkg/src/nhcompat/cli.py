"""Command-line entry point: ``nhcompat <command> --scenario <name|file> [options]``."""
import argparse
import json
import sys

from . import __version__, runner
from .exceptions import ConfigError
from .scenarios import load

# subcommand -> stages executed
_STAGES = {
    "classify": ("classify",),
    "spectrum": ("spectrum",),
    "compat": ("spectrum", "compat"),
    "simulate": ("simulate",),
    "compare": ("simulate", "compare"),
    "run": runner.STAGES,
}


def _parser():
    p = argparse.ArgumentParser(
        prog="nhcompat",
        description="Classify a velocity constraint, check the compatibility of the two "
                    "constrained dynamics, and integrate both to measure their divergence.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in _STAGES:
        s = sub.add_parser(name, help=f"stages: {', '.join(_STAGES[name])}")
        s.add_argument("--scenario", required=True, help="builtin name or path to a scenario JSON file")
        s.add_argument("--out", help="run directory (default runs/<name>-<timestamp>)")
        s.add_argument("--T", type=float, help="final time")
        s.add_argument("--h", type=float, help="RK4 step")
        s.add_argument("--mu0", type=float, help="initial multiplier for the multiplier-rule system")
        s.add_argument("--seed", type=int, help="seed for random chart samples")
        s.add_argument("--tol", type=float, help="tolerance of the compatibility verdict")
        s.add_argument("--project-velocity", action="store_true",
                       help="project an inadmissible qdot0 onto the constraint instead of failing")
        s.add_argument("--quiet", action="store_true", help="do not print the report")
    r = sub.add_parser("report", help="summarize an existing run directory")
    r.add_argument("run_dir")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "report":
        try:
            print(runner.report(args.run_dir))
        except (FileNotFoundError, ValueError, KeyError, json.JSONDecodeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return runner.EXIT_CONFIG
        return runner.EXIT_OK

    try:
        config = load(args.scenario)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return runner.EXIT_CONFIG
    overrides = {"T": args.T, "h": args.h, "seed": args.seed, "tol_compat": args.tol}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.mu0 is not None:
        overrides["mu0"] = args.mu0
    result = runner.run_scenario(config, out_dir=args.out, commands=_STAGES[args.command],
                                 overrides=overrides, project_velocity=args.project_velocity)
    if result.exit_code == runner.EXIT_CONFIG:
        print(f"config error: {result.manifest.get('error')}", file=sys.stderr)
    elif result.exit_code == runner.EXIT_NUMERIC:
        print(f"numeric error: {result.manifest.get('error')}", file=sys.stderr)
    if not args.quiet:
        print(runner.report(result.run_dir))
    print(f"run directory: {result.run_dir}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())

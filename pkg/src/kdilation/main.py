"""kdilation command-line entry point.

Exit codes: 0 success, 1 usage, 2 ledger miss, 3 numerical stage failure,
4 acceptance-threshold miss.
"""

import argparse
import asyncio
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, NoReturn

from pydantic import ValidationError

from .config import KDilationConfig, load_config
from .core import KDilationApp
from .dilation import SweepRangeError
from .errors import KDilationError
from .ledger import LedgerError, LedgerMissError
from .maps import ChartCapacityError, CompositionError, MapSpecError
from .models import RunConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_LEDGER_MISS = 2
EXIT_NUMERIC = 3
EXIT_ACCEPTANCE = 4

USAGE_ERRORS: tuple[type[BaseException], ...] = (
    LedgerError,
    ValidationError,
    MapSpecError,
    CompositionError,
    ChartCapacityError,
    SweepRangeError,
    OSError,
)


class UsageError(Exception):
    """Bad command line or config file."""


class _Parser(argparse.ArgumentParser):
    """Reports bad arguments with exit code 1 instead of argparse's 2."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="sampling seed")
    parser.add_argument("--budget", type=int, default=None, help="samples per dilation estimate")
    parser.add_argument("--out", default=None, help="report directory")
    parser.add_argument("--format", choices=("json", "csv"), default=None, help="report format")
    parser.add_argument("--config", type=Path, default=None, help="JSON file mirroring the run config")


def _construction(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--construction", choices=("hopf", "collapse"), default=None)
    parser.add_argument("--m", type=int, default=None, help="domain dimension of the collapse class")
    parser.add_argument("--p", type=int, default=None, help="number of suspensions")
    parser.add_argument("--k", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kdilation", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    filtration = commands.add_parser("filtration", help="certificates for V_k pi_m(S^n)")
    filtration.add_argument("--m", type=int, required=True)
    filtration.add_argument("--n", type=int, required=True)
    filtration.add_argument("--k", type=int, default=None)

    targets = commands.add_parser("targets", help="dimensions M with nontrivial classes of 3-dilation ~ 0")
    targets.add_argument("--N", dest="N", type=int, required=True)
    targets.add_argument("--count", type=int, default=None)

    construct = commands.add_parser("construct", help="emit the construction as MapExpr JSON")
    _construction(construct)
    construct.add_argument("--epsilon", default=None, help="rational width, e.g. 1/4")

    dilation = commands.add_parser("dilation", help="sampled k-dilation of a map")
    dilation.add_argument("--map", dest="map_spec", required=True)
    dilation.add_argument("--k", type=int, default=None)

    sweep = commands.add_parser("sweep", help="scaling sweep over an epsilon grid")
    _construction(sweep)
    sweep.add_argument("--epsilon-grid", default=None, help="comma-separated rationals, largest first")

    hopf = commands.add_parser("hopf", help="Hopf invariant and 2-dilation of a map S^3 -> S^2")
    hopf.add_argument("--map", dest="map_spec", required=True)

    audit = commands.add_parser("audit", help="|H| <= C D^2 across hopf o wrap(d)")

    for sub in (filtration, targets, construct, dilation, sweep, hopf, audit):
        _shared(sub)
    return parser


def build_run_config(args: argparse.Namespace, config: KDilationConfig) -> RunConfig:
    """Config defaults, then environment, then the --config file, then command-line flags."""
    data: dict[str, Any] = {
        "seed": config.seed,
        "budget": config.dilation.budget,
        "output_dir": config.output.directory,
        "format": config.output.format,
    }
    if args.config is not None:
        try:
            loaded = json.loads(args.config.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise UsageError(f"config file {args.config} is not valid JSON: {e}") from e
        if not isinstance(loaded, dict):
            raise UsageError(f"config file {args.config} must hold a JSON object")
        data.update(loaded)

    flags = {
        "seed": args.seed,
        "budget": args.budget,
        "output_dir": args.out,
        "format": args.format,
        "k": getattr(args, "k", None),
        "epsilon_grid": getattr(args, "epsilon_grid", None),
    }
    data.update({key: value for key, value in flags.items() if value is not None})

    construction = dict(data.get("construction") or {})
    for key, flag in (("name", "construction"), ("m", "m"), ("p", "p")):
        value = getattr(args, flag, None)
        if value is not None and args.command != "filtration":
            construction[key] = value
    data["construction"] = construction
    return RunConfig.model_validate(data)


def command_arguments(args: argparse.Namespace) -> dict[str, Any]:
    """Keyword arguments of the KDilationApp method behind a subcommand."""
    match args.command:
        case "filtration":
            return {"m": args.m, "n": args.n, "k": args.k}
        case "targets":
            return {"N": args.N, "count": args.count}
        case "construct":
            return {"epsilon": None if args.epsilon is None else Fraction(args.epsilon)}
        case "dilation":
            return {"map_spec": args.map_spec, "k": args.k}
        case "hopf":
            return {"map_spec": args.map_spec}
        case _:
            return {}


def exit_code(error: BaseException) -> int:
    """Documented exit code for an exception escaping a command."""
    if isinstance(error, LedgerMissError):
        return EXIT_LEDGER_MISS
    if isinstance(error, USAGE_ERRORS + (UsageError,)):
        return EXIT_USAGE
    if isinstance(error, KDilationError):
        return EXIT_NUMERIC
    if isinstance(error, ValueError):
        return EXIT_USAGE
    return EXIT_NUMERIC


def configure_logging(config: KDilationConfig) -> None:
    level = logging.DEBUG if config.debug else getattr(logging, config.log_level.upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


async def async_main(argv: list[str] | None = None) -> int:
    """Async main function."""
    args = build_parser().parse_args(argv)

    # Load configuration
    try:
        config = load_config()
    except Exception as e:
        print(f"Failed to load configuration: {e}")
        return EXIT_USAGE
    configure_logging(config)

    try:
        run = build_run_config(args, config)
    except (UsageError, ValidationError, OSError) as e:
        print(f"❌ Invalid run configuration: {e}")
        return EXIT_USAGE

    app = KDilationApp(config, run)
    try:
        report = await app.execute(args.command, **command_arguments(args))
        app.write(report)
    except Exception as e:
        code = exit_code(e)
        if code == EXIT_NUMERIC:
            logging.getLogger(__name__).debug("numerical stage failed", exc_info=e)
        print(f"❌ {args.command} failed: {e}")
        return code

    if report.passed is False:
        print(f"❌ {args.command} missed its acceptance threshold")
        return EXIT_ACCEPTANCE
    print(f"✅ {args.command} done")
    return EXIT_OK


def main() -> None:
    """Main entry point."""
    try:
        sys.exit(asyncio.run(async_main()))
    except KeyboardInterrupt:
        print("\n👋 kdilation stopped.")
        sys.exit(EXIT_NUMERIC)


if __name__ == "__main__":
    main()

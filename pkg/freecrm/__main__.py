"""freecrm CLI - batch front-end for laws, densities and oracle comparisons.

Usage Examples:
    $ fcrm validate --model m.json
    $ fcrm law --model m.json --set "[0,2)" --out t.json
    $ fcrm density --triplet semicircle.json --grid -3:3:600 --out d.csv
    $ fcrm classical --model m.json --set "[0,1)" --grid -1:8:2048 --out c.csv
    $ fcrm classical --model m.json --set "[0,1)" --reps 10000 --seed 1 --ks-max 0.02 --out c.csv
    $ fcrm oracle-compare --model m.json --set "[0,2)" --n 1000 --seed 42 --ks-max 0.05
    $ fcrm additivity --model m.json --parts "[0,1);[1,3)" --out report.json

Exit codes: 0 success, 2 parse error, 3 validation failure, 4 numerical
failure, 5 KS threshold breach.
"""

import argparse
import math
import sys
import textwrap
from pathlib import Path
from typing import List, Optional

from freecrm._version import __version__
from freecrm.config import ToolkitConfiguration
from freecrm.constants import EXIT_PARSE
from freecrm.exceptions import FreeCrmError, ParseError, ThresholdError
from freecrm.utils.logger import Logger
from freecrm.builder.facade import FcrmSystem, as_region, compare_with_oracle
from freecrm.core import inversion
from freecrm.core.bijection import bp_map, bp_unmap
from freecrm.core.levy import CharTriplet, Kind
from freecrm.core.oracle import sample_classical_triplet
from freecrm.core.tables import EmpiricalSpectrum, GridSpec
from freecrm.utils.export import (
    export_data,
    write_cdf_comparison_csv,
    write_density_csv,
)
from freecrm.utils.common import translate_numpy_errors
from freecrm.utils.formatters import format_density_summary, format_rows, format_triplet
from freecrm.utils.schema import parse_model, parse_triplet, triplet_to_dict

logger = Logger.get_logger()


def info(msg: str) -> None:
    """Print info message to stderr (stdout carries data)."""
    print(f"[INFO] {msg}", file=sys.stderr)


def error(msg: str) -> None:
    """Print error message."""
    print(f"[ERROR] {msg}", file=sys.stderr)


def _emit(content: str, out: Optional[str]) -> None:
    if out:
        info(f"wrote {out}")
    else:
        sys.stdout.write(content)


def _export_format(args) -> str:
    if args.format:
        return args.format
    if args.out and Path(args.out).suffix.lower() in {".yaml", ".yml"}:
        return "yaml"
    return "json"


def _grid(args) -> Optional[GridSpec]:
    if args.grid:
        return GridSpec.parse(args.grid, eps=args.eps)
    if args.eps is not None:
        raise ParseError("--eps needs --grid")
    return None


def _system(args, config: ToolkitConfiguration) -> FcrmSystem:
    if not args.model:
        raise ParseError(f"{args.command} needs --model")
    return FcrmSystem(parse_model(args.model, config), config)


def _region(args):
    if args.set is None:
        raise ParseError(f"{args.command} needs --set with a region like \"[0,1)\"")
    return as_region(args.set)


def _free_law(args, config: ToolkitConfiguration) -> CharTriplet:
    """Free triplet from --triplet (classical input mapped through the bijection) or --model/--set."""
    if args.triplet:
        t = parse_triplet(args.triplet, config)
        return t if t.kind is Kind.FREE else bp_map(t)
    return _system(args, config).law(_region(args))


def _classical_law(args, config: ToolkitConfiguration) -> CharTriplet:
    if args.triplet:
        t = parse_triplet(args.triplet, config)
        return t if t.kind is Kind.CLASSICAL else bp_unmap(t)
    return _system(args, config).classical_law(_region(args))


# === Command handlers ===


@translate_numpy_errors
def handle_validate(args, config: ToolkitConfiguration) -> int:
    if args.triplet:
        t = parse_triplet(args.triplet, config)
        print(format_triplet(t, "Valid triplet"))
        return 0
    system = _system(args, config)
    if args.format:
        print(export_data(system.summary(args.set), args.format), end="")
    else:
        model = system.model
        print(format_rows(
            [["alpha", len(model.alpha.atoms), len(model.alpha.densities)],
             ["nu_E", len(model.nu_E.atoms), len(model.nu_E.densities)],
             ["nu_B", len(model.nu_B.atoms), len(model.nu_B.densities)]],
            ["measure", "atoms", "densities"],
        ))
        print(f"fixed atoms: {len(model.fixed_atoms)}; model is valid")
    return 0


@translate_numpy_errors
def handle_law(args, config: ToolkitConfiguration) -> int:
    system = _system(args, config)
    region = _region(args)
    law = system.classical_law(region) if args.classical else system.law(region)
    content = export_data(triplet_to_dict(law), _export_format(args), args.out)
    _emit(content, args.out)
    return 0


@translate_numpy_errors
def handle_density(args, config: ToolkitConfiguration) -> int:
    law = _free_law(args, config)
    table = inversion.free_density(law, _grid(args) or inversion.default_grid(law, config=config), config)
    info(format_density_summary(table))
    _emit(write_density_csv(table, args.out), args.out)
    return 0


def _classical_samples(args, law: CharTriplet, config: ToolkitConfiguration) -> EmpiricalSpectrum:
    """Monte Carlo draws of the classical law: L(E) for --model/--set, the triplet itself for --triplet."""
    if not args.triplet:
        return _system(args, config).classical_samples(_region(args), args.reps, args.seed)
    truncation = None if math.isfinite(law.nu.total_mass()) else config.oracle.truncation
    values = sample_classical_triplet(law, args.reps, args.seed, truncation=truncation, config=config)
    return EmpiricalSpectrum(values, args.seed, "classical")


@translate_numpy_errors
def handle_classical(args, config: ToolkitConfiguration) -> int:
    law = _classical_law(args, config)
    table = inversion.classical_density(law, _grid(args) or inversion.default_grid(law, config=config), config)
    info(format_density_summary(table))
    _emit(write_density_csv(table, args.out), args.out)
    if args.reps is None:
        return 0
    ks = inversion.ks_between(table, _classical_samples(args, law, config), config)
    info(f"Monte Carlo KS = {ks:.6f} (reps={args.reps}, seed={args.seed})")
    if args.ks_max is not None and ks > args.ks_max:
        raise ThresholdError(f"KS distance {ks:.6f} exceeds --ks-max {args.ks_max}", ks=ks, ks_max=args.ks_max)
    return 0


@translate_numpy_errors
def handle_oracle_compare(args, config: ToolkitConfiguration) -> int:
    law = _free_law(args, config)
    comparison = compare_with_oracle(law, args.n, args.seed, _grid(args), config)
    content = write_cdf_comparison_csv(
        comparison.table.xs, comparison.analytic_cdf, comparison.empirical_cdf, comparison.ks, args.out
    )
    _emit(content, args.out)
    info(f"KS = {comparison.ks:.6f} (n={args.n}, seed={args.seed})")
    if args.ks_max is not None and comparison.ks > args.ks_max:
        raise ThresholdError(
            f"KS distance {comparison.ks:.6f} exceeds --ks-max {args.ks_max}",
            ks=comparison.ks,
            ks_max=args.ks_max,
        )
    return 0


def _split_regions(text: Optional[str]) -> List[str]:
    return [part for part in (text or "").split(";") if part.strip()]


@translate_numpy_errors
def handle_additivity(args, config: ToolkitConfiguration) -> int:
    system = _system(args, config)
    parts = _split_regions(args.parts)
    if not parts:
        raise ParseError("additivity needs --parts with ';'-separated regions")
    report = system.additivity(parts, args.n, args.seed)
    data = {
        "parts": [str(as_region(p)) for p in parts],
        "union_law": triplet_to_dict(report.union_law),
        "parts_sum": triplet_to_dict(report.parts_sum),
        "exact": report.exact,
        "oracle_ks": report.oracle_ks,
        "details": list(report.details),
    }
    coarse = _split_regions(args.coarse)
    if coarse:
        refinement = system.refinement(coarse, parts)
        data["refinement"] = [
            {"coarse": region, "fine_sets": count, "exact": exact} for region, count, exact in refinement.rows
        ]
        data["refinement_exact"] = refinement.exact
    _emit(export_data(data, _export_format(args), args.out), args.out)
    return 0


HANDLERS = {
    "validate": handle_validate,
    "law": handle_law,
    "density": handle_density,
    "classical": handle_classical,
    "oracle-compare": handle_oracle_compare,
    "additivity": handle_additivity,
}


def create_parser() -> argparse.ArgumentParser:
    """Create argument parser."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", metavar="PATH", help="model JSON file")
    common.add_argument("--triplet", metavar="PATH", help="characteristic triplet JSON file")
    common.add_argument("--set", metavar="REGION", help='region such as "[0,1)+[2,3)"')
    common.add_argument("--grid", metavar="LO:HI:N", help="evaluation grid")
    common.add_argument("--eps", type=float, help="Stieltjes offset (default: automatic)")
    common.add_argument("--n", type=int, help="matrix size for oracle sampling")
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--format", choices=["json", "yaml", "yml"], help="report format")
    common.add_argument("--workers", type=int, help="threads for grid evaluation")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")

    parser = argparse.ArgumentParser(
        prog="fcrm",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description="freecrm - free completely random measures: laws, densities and oracle checks",
        epilog=textwrap.dedent("""
            Regions are unions of half-open intervals, e.g. "[0,1)+[2,3)".
            Exit codes: 0 ok, 2 parse, 3 validation, 4 numerical, 5 KS threshold.
        """),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    sub.add_parser("validate", parents=[common], help="validate a model or triplet file")
    law = sub.add_parser("law", parents=[common], help="triplet of G(E) as JSON/YAML")
    law.add_argument("--classical", action="store_true", help="classical counterpart law instead")
    sub.add_parser("density", parents=[common], help="free density table (CSV)")
    classical = sub.add_parser("classical", parents=[common], help="classical counterpart density table (CSV)")
    classical.add_argument("--reps", type=int, help="also draw this many Monte Carlo samples and report their KS")
    classical.add_argument("--ks-max", type=float, help="with --reps, fail with exit 5 when KS exceeds this")
    compare = sub.add_parser("oracle-compare", parents=[common], help="analytic vs random-matrix CDF (CSV)")
    compare.add_argument("--ks-max", type=float, help="fail with exit 5 when KS exceeds this")
    additivity = sub.add_parser("additivity", parents=[common], help="additivity and refinement report")
    additivity.add_argument("--parts", metavar="R1;R2", help="';'-separated disjoint regions")
    additivity.add_argument("--coarse", metavar="C1;C2", help="';'-separated coarse sets refined by the parts")
    return parser


def _configure(args) -> ToolkitConfiguration:
    config = ToolkitConfiguration.from_env()
    if args.workers is not None:
        config.inversion.workers = args.workers
    if args.log_level:
        config.log_level = args.log_level.upper()
        Logger.get_instance().set_log_level(config.log_level)
    config.validate()
    return config


def _attach_grid_values(argv: List[str]) -> List[str]:
    """Join ``--grid -3:3:600`` into ``--grid=-3:3:600`` (argparse reads a leading "-" as an option)."""
    out: List[str] = []
    tokens = iter(argv)
    for token in tokens:
        if token == "--grid":
            value = next(tokens, None)
            out.append(token if value is None else f"--grid={value}")
        else:
            out.append(token)
    return out


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = create_parser()
    argv = _attach_grid_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else 0

    if args.command == "oracle-compare" and args.n is None:
        error("oracle-compare needs --n")
        return EXIT_PARSE

    try:
        config = _configure(args)
        return HANDLERS[args.command](args, config)

    except KeyboardInterrupt:
        print()
        print("[WARNING] Operation cancelled by user", file=sys.stderr)
        return 130

    except FreeCrmError as e:
        error(str(e))
        logger.debug("%s context: %s", type(e).__name__, e.context)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())

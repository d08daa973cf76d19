"""
Module for the command line interface of fvlab.

Includes all parsers and the logic for the CLI.
"""

import argparse
import math
import sys
from collections.abc import Sequence

from fvlab.alphabet import InvalidDistributionError, InvalidTypeError
from fvlab.asymptotics import (
    VARIANT_OF_CODE,
    FitDesignError,
    RatePrediction,
    fit_passes,
    geometric_grid,
    j_value,
    predicted_rate,
    third_order_fit,
    third_order_sweep,
)
from fvlab.cli_tools import ConsistentFormatter
from fvlab.coding import CodeShapeError, CoverageError, OracleSizeError
from fvlab.config import ConfigError, RunConfig
from fvlab.converse import (
    InfeasibleGammaError,
    MixtureInformation,
    converse_bits_for_rate,
    entropy_sphere_grid,
    max_converse_bound,
    worst_case_bits,
)
from fvlab.kraft import InvalidProfileError
from fvlab.laplace import QuadratureError, laplace_order_check
from fvlab.logging_tools import log_check, logger, set_verbosity
from fvlab.reports import write_json, write_report
from fvlab.universal import rate_bits
from fvlab.verify import run_suite

# Errors reported with exit status 2
FVLAB_ERRORS = (
    ConfigError,
    InvalidDistributionError,
    InvalidTypeError,
    CoverageError,
    OracleSizeError,
    CodeShapeError,
    FitDesignError,
    InfeasibleGammaError,
    QuadratureError,
    InvalidProfileError,
)

# Defaults of the n grid per subcommand
SWEEP_NS = (512, 4096)
CONVERSE_NS = (100, 200, 400)
LAPLACE_NS = (64, 128, 256, 512, 1024)

# Slack of the achievable converse check
CONVERSE_SLACK = 1e-9

# Settings each subcommand does not use
_VERIFY_ONLY = ("max_n", "sandwich_n", "interleave_n")
_CONVERSE_ONLY = ("gamma", "resolution", "beta_floor")
_SWEEP_ONLY = ("tolerance", "summary")
IGNORED = {
    "rates": (*_VERIFY_ONLY, *_CONVERSE_ONLY, *_SWEEP_ONLY, "cases"),
    "sweep": (*_VERIFY_ONLY, *_CONVERSE_ONLY, "cases"),
    "converse": (*_VERIFY_ONLY, *_SWEEP_ONLY, "cases"),
    "verify": (
        *_CONVERSE_ONLY,
        *_SWEEP_ONLY,
        "cases",
        "m",
        "dist",
        "n",
        "eps",
        "codes",
    ),
    "laplace": (
        *_VERIFY_ONLY,
        *_CONVERSE_ONLY,
        *_SWEEP_ONLY,
        "m",
        "dist",
        "eps",
        "codes",
    ),
}


def _add_parser(
    name: str,
    parser_options: dict,
    subparsers: argparse._SubParsersAction | None,
    prog: str | None,
) -> argparse.ArgumentParser:
    if subparsers:
        parser = subparsers.add_parser(
            name, help=parser_options["description"], **parser_options
        )
    else:
        parser = argparse.ArgumentParser(prog=prog, **parser_options)
    RunConfig.add_to_argparser(parser, ignore=IGNORED[name])
    return parser


# Define argument parsers
def get_rates_parser(
    subparsers: argparse._SubParsersAction | None = None,
    prog: str | None = None,
    formatter_class: type | None = None,
) -> argparse.ArgumentParser:
    """
    Create and configure the argument parser for 'rates'.

    This function can either add a subparser to an existing ArgumentParser
    (via `subparsers`) or create a standalone parser when called independently.

    Parameters
    ----------
    subparsers : argparse._SubParsersAction, optional
        Subparsers object from the main parser to which this parser should be added.
        If None, a standalone ArgumentParser is created instead.
    prog : str, optional
        The program name used in standalone mode. Ignored if `subparsers` is provided.
    formatter_class : type, optional
        The formatter class to be used for argument help formatting. Defaults to
        argparse.ArgumentDefaultsHelpFormatter.

    Returns
    -------
    argparse.ArgumentParser
        The configured argument parser (necessary esp. for standalone mode).
    """
    parser_options = {
        "description": (
            "computes the exact ε-rates of universal and optimal codes at each n and "
            "eps, together with the third-order prediction"
        ),
        "epilog": (
            "Example:\n"
            "  > %(prog)s --dist 0.8,0.2 --n 3 --eps 0.05 --code optimal "
            "<FORMATTER:NOPERIOD>"
        ),
        "formatter_class": formatter_class or argparse.ArgumentDefaultsHelpFormatter,
    }
    return _add_parser("rates", parser_options, subparsers, prog)


def get_sweep_parser(
    subparsers: argparse._SubParsersAction | None = None,
    prog: str | None = None,
    formatter_class: type | None = None,
) -> argparse.ArgumentParser:
    """
    Create and configure the argument parser for 'sweep'.

    Parameters
    ----------
    subparsers : argparse._SubParsersAction, optional
        Subparsers object from the main parser to which this parser should be added.
        If None, a standalone ArgumentParser is created instead.
    prog : str, optional
        The program name used in standalone mode. Ignored if `subparsers` is provided.
    formatter_class : type, optional
        The formatter class to be used for argument help formatting.

    Returns
    -------
    argparse.ArgumentParser
        The configured argument parser.
    """
    parser_options = {
        "description": (
            "sweeps exact bit counts over a geometric n grid and fits the "
            "third-order coefficient of every code"
        ),
        "epilog": (
            "Example (default grid 512:4096):\n"
            "  > %(prog)s --dist 0.5,0.3,0.2 --eps 0.1 --code type-size "
            "--summary fit.json <FORMATTER:NOPERIOD>"
        ),
        "formatter_class": formatter_class or argparse.ArgumentDefaultsHelpFormatter,
    }
    return _add_parser("sweep", parser_options, subparsers, prog)


def get_converse_parser(
    subparsers: argparse._SubParsersAction | None = None,
    prog: str | None = None,
    formatter_class: type | None = None,
) -> argparse.ArgumentParser:
    """
    Create and configure the argument parser for 'converse'.

    Parameters
    ----------
    subparsers : argparse._SubParsersAction, optional
        Subparsers object from the main parser to which this parser should be added.
        If None, a standalone ArgumentParser is created instead.
    prog : str, optional
        The program name used in standalone mode. Ignored if `subparsers` is provided.
    formatter_class : type, optional
        The formatter class to be used for argument help formatting.

    Returns
    -------
    argparse.ArgumentParser
        The configured argument parser.
    """
    parser_options = {
        "description": (
            "evaluates the mixture converse over the entropy sphere J(P) = Gamma and "
            "compares it with the worst-case bit count of universal codes"
        ),
        "formatter_class": formatter_class or argparse.ArgumentDefaultsHelpFormatter,
    }
    return _add_parser("converse", parser_options, subparsers, prog)


def get_verify_parser(
    subparsers: argparse._SubParsersAction | None = None,
    prog: str | None = None,
    formatter_class: type | None = None,
) -> argparse.ArgumentParser:
    """Create and configure the argument parser for 'verify'."""
    parser_options = {
        "description": "runs the invariant suite and exits with 1 on any violation",
        "formatter_class": formatter_class or argparse.ArgumentDefaultsHelpFormatter,
    }
    return _add_parser("verify", parser_options, subparsers, prog)


def get_laplace_parser(
    subparsers: argparse._SubParsersAction | None = None,
    prog: str | None = None,
    formatter_class: type | None = None,
) -> argparse.ArgumentParser:
    """Create and configure the argument parser for 'laplace'."""
    parser_options = {
        "description": (
            "compares catalog integrals with their Laplace approximation and checks "
            "the 1/n decay of the relative error"
        ),
        "formatter_class": formatter_class or argparse.ArgumentDefaultsHelpFormatter,
    }
    return _add_parser("laplace", parser_options, subparsers, prog)


def _source_columns(config: RunConfig) -> dict:
    P = config.require_dist()
    return {"m": P.m, "dist": str(P)}


def rates_mode(config: RunConfig) -> int:
    """Run the rates subcommand."""
    P = config.require_dist()
    if config.n is None:
        msg = "'rates' needs --n!"
        raise ConfigError(msg)
    rows = []
    for n in config.n:
        for eps in config.eps:
            for code in config.code_names:
                bits = rate_bits(code, P, n, eps)
                rows.append(
                    {
                        "n": n,
                        "eps": eps,
                        "code": code,
                        "nR_bits": bits,
                        "rate": bits / n,
                        "predicted_rate": predicted_rate(
                            P, n, eps, VARIANT_OF_CODE[code]
                        ),
                        **_source_columns(config),
                    }
                )
                logger.debug(f"{code}: n={n}, eps={eps}, nR={bits}")
    write_report(rows, config.fmt, config.out)
    return 0


def sweep_mode(config: RunConfig) -> int:
    """Run the sweep subcommand and fit the third-order coefficients."""
    P = config.require_dist()
    ns = config.n if config.n is not None else geometric_grid(*SWEEP_NS)
    rows, summary = [], []
    status = 0
    for eps in config.eps:
        for code in config.code_names:
            variant = VARIANT_OF_CODE[code]
            points = third_order_sweep(code, P, eps, ns)
            rows.extend(
                {
                    "n": point.n,
                    "eps": eps,
                    "code": code,
                    "variant": variant,
                    "nR_bits": point.bits,
                    "y": point.y,
                    **_source_columns(config),
                }
                for point in points
            )
            fit = third_order_fit(points)
            target = RatePrediction.for_variant(P, variant).c
            passed = fit_passes(fit, target, config.tolerance)
            log_check(
                f"third-order slope of {code} at eps={eps}",
                passed,
                f"{fit.slope:.3f} (target {target:g} ± {config.tolerance:g})",
            )
            summary.append(
                {
                    "code": code,
                    "variant": variant,
                    "eps": eps,
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "residual": fit.residual,
                    "n_points": fit.n_points,
                    "target_c": target,
                    "pass": passed,
                }
            )
            status = status or int(not passed)
    write_report(rows, config.fmt, config.out)
    if config.summary is not None:
        write_json(summary, config.summary)
    return status


def converse_mode(config: RunConfig) -> int:
    """Run the converse subcommand."""
    P = config.require_dist()
    codes = config.codes if config.codes is not None else ["type-size"]
    if "optimal" in codes:
        msg = "The optimal code depends on P, the converse needs a universal code!"
        raise ConfigError(msg)
    ns = config.n if config.n is not None else list(CONVERSE_NS)
    rows = []
    status = 0
    for n in ns:
        for eps in config.eps:
            gamma = config.gamma if config.gamma is not None else j_value(P, n, eps)
            grid = entropy_sphere_grid(
                P.support,
                gamma,
                eps,
                n,
                config.resolution,
                alphabet_size=P.m,
                beta_floor=config.beta_floor,
            )
            information = MixtureInformation(grid, n)
            shift = math.ceil(2 * math.log2(n))
            for code in codes:
                k = worst_case_bits(code, grid, n, eps)
                for threshold, k_bits in (
                    ("achievable", converse_bits_for_rate(k)),
                    ("shifted", converse_bits_for_rate(k) - shift),
                ):
                    result = max_converse_bound(
                        k_bits, grid, n, information=information
                    )
                    rows.append(
                        {
                            "n": n,
                            "eps": eps,
                            "code": code,
                            "threshold": threshold,
                            "gamma": gamma,
                            "k_bits": k_bits,
                            "tau_star": result.tau_star,
                            "bound": result.bound,
                            "grid_points": len(grid),
                            **_source_columns(config),
                        }
                    )
                    if threshold == "achievable":
                        passed = result.bound <= eps + CONVERSE_SLACK
                        log_check(
                            f"converse at n={n}, eps={eps}, {code}",
                            passed,
                            f"bound {result.bound:.4g} at k={k_bits}",
                        )
                        status = status or int(not passed)
                    else:
                        passed = result.bound > eps
                        log_check(
                            f"shifted converse at n={n}, eps={eps}, {code}",
                            passed,
                            f"bound {result.bound:.4g} at k={k_bits}",
                        )
                        status = status or int(not passed)
    write_report(rows, config.fmt, config.out)
    return status


def verify_mode(config: RunConfig) -> int:
    """Run the verify subcommand."""
    results = run_suite(
        max_n=config.max_n,
        sandwich_n=config.sandwich_n,
        interleave_n=config.interleave_n,
    )
    write_report([result.as_row() for result in results], config.fmt, config.out)
    return int(not all(result.passed for result in results))


def laplace_mode(config: RunConfig) -> int:
    """Run the laplace subcommand."""
    ns = config.n if config.n is not None else list(LAPLACE_NS)
    rows = []
    status = 0
    for case in config.cases:
        check = laplace_order_check(case, ns)
        previous = None
        for result in check.results:
            ratio = ""
            if previous is not None and previous.rel_err > 0:
                ratio = result.rel_err / previous.rel_err
            rows.append(
                {
                    "n": result.n,
                    "case": case,
                    "numeric": result.numeric,
                    "asymptotic": result.asymptotic,
                    "rel_err": result.rel_err,
                    "ratio": ratio,
                }
            )
            previous = result
        log_check(f"Laplace order of {case}", check.passed)
        status = status or int(not check.passed)
    write_report(rows, config.fmt, config.out)
    return status


def run(config: RunConfig) -> int:
    """
    Run a configured subcommand and write its reports.

    Returns
    -------
    int
        0 on success, 1 if an invariant is violated.
    """
    logger.debug(f"Settings:\n{config.nice_str}")
    match config.command:
        case "rates":
            return rates_mode(config)
        case "sweep":
            return sweep_mode(config)
        case "converse":
            return converse_mode(config)
        case "verify":
            return verify_mode(config)
        case "laplace":
            return laplace_mode(config)
        case _:
            msg = f"Unknown command '{config.command}'!"
            raise ConfigError(msg)


def main(argv: Sequence[str] | None = None) -> None:
    """
    Run main CLI tool.

    Exits with 0 on success, 1 on an invariant violation and 2 on invalid input
    or a failed computation.
    """
    formatter_class = ConsistentFormatter
    parser = argparse.ArgumentParser(
        prog="fvlab",
        description=(
            "exact finite-blocklength rates of universal fixed-to-variable source "
            "codes, their converse and the invariants behind them"
        ),
        formatter_class=formatter_class,
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="more log output"
    )
    parser.add_argument(
        "-q", "--quiet", action="count", default=0, help="less log output"
    )
    subparsers = parser.add_subparsers(dest="command")

    command_parsers = (
        get_rates_parser,
        get_sweep_parser,
        get_converse_parser,
        get_verify_parser,
        get_laplace_parser,
    )
    for command_parser in command_parsers:
        command_parser(subparsers, formatter_class=formatter_class)

    args = parser.parse_args(argv)
    set_verbosity(args.verbose, args.quiet)
    if args.command is None:
        parser.print_help()
        parser.exit(status=2, message="Run again and specify a supported command.\n")

    try:
        status = run(RunConfig.from_argparser(args))
    except FVLAB_ERRORS as err:
        logger.error(err, exc_info=True)
        sys.exit(2)
    sys.exit(status)


if __name__ == "__main__":
    main()

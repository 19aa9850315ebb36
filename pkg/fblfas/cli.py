"""
Command line entry point.

    fblfas <subcommand> [flags]

Exit codes: 0 success, 1 failed validation checks, 2 invalid arguments,
3 numerical failure (nothing is written).
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd
from jsonargparse import ArgumentParser, Namespace
from marshmallow.exceptions import ValidationError

from fblfas.bler import (
    BlerPoint,
    bler_l_antenna,
    bler_points_to_csv,
    conditional_bler_fas,
    random_coding_point,
    statistical_bler_fas,
)
from fblfas.channel import SystemConfig, profile_for
from fblfas.codeword import analytic_correlation_stats
from fblfas.distribution import empirical_distribution, evaluate_distribution
from fblfas.experiments import load_sweep_spec
from fblfas.experiments.base import McSpec
from fblfas.experiments.runner import run_sweep
from fblfas.montecarlo import (
    McReport,
    mc_codeword_correlation,
    mc_gfas,
    mc_ml_bler_small,
    mc_sinr_outage,
    mc_sinr_ratio,
)
from fblfas.outage import (
    OutagePoint,
    OutageQuery,
    outage_fas,
    outage_mrc,
    outage_points_to_csv,
)
from fblfas.quadrature import QuadratureError
from fblfas.validation import SUITES, format_report, run_checks

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_INVALID = 2
EXIT_NUMERIC = 3

SYSTEM_FLAGS = {
    "n_ports": "n_ports",
    "aperture_w": "aperture_w",
    "sigma2": "channel_var",
    "blocklength": "blocklength",
    "n_users": "n_users",
    "codeword_var": "codeword_var",
}


LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


def _add_output_arguments(parser: ArgumentParser) -> None:
    parser.add_argument(
        "--out",
        type=Optional[str],
        default=None,
        help="Output file, standard output when omitted",
    )
    parser.add_argument(
        "--format", type=str, default="csv", choices=["csv", "json"], help="Output format"
    )
    parser.add_argument(
        "--log-level", type=str, default="WARNING", choices=LOG_LEVELS, help="Logging level"
    )


def _add_system_arguments(parser: ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        type=Optional[str],
        default=None,
        help="SystemConfig JSON file, explicit flags take precedence",
    )
    for flag, kls, text in (
        ("--n-ports", int, "Number of FAS ports N (count)"),
        ("--aperture-w", float, "Aperture length W (wavelengths)"),
        ("--sigma2", float, "Channel variance sigma^2 (linear)"),
        ("--snr-db", float, "SNR sigma^2 / sigma_eta^2 (dB)"),
        ("--blocklength", int, "Blocklength M (channel uses)"),
        ("--n-users", int, "Number of codewords U (count)"),
        ("--codeword-var", float, "Codeword variance sigma_c^2 (linear), 1/M when omitted"),
    ):
        parser.add_argument(flag, type=Optional[kls], default=None, help=text)
    _add_output_arguments(parser)


def _add_mc_arguments(parser: ArgumentParser, trials: int) -> None:
    parser.add_argument("--seed", type=int, default=0, help="Seed of the random streams")
    parser.add_argument(
        "--trials", type=int, default=trials, help="Monte-Carlo trials (count)"
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=1,
        help="Worker threads (count), results do not depend on it",
    )


def _add_snr_sweep(parser: ArgumentParser) -> None:
    parser.add_argument(
        "--snr-sweep",
        type=Optional[list[float]],
        default=None,
        help="SNR values (dB) as a list, e.g. [0, 5, 10], replaces --snr-db",
    )


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="fblfas", description="Finite-blocklength fluid antenna system analysis"
    )
    subcommands = parser.add_subcommands(dest="subcommand", required=True)

    correlation = ArgumentParser(description="Mean and maximum codeword correlation")
    _add_system_arguments(correlation)
    _add_mc_arguments(correlation, trials=0)

    distribution = ArgumentParser(description="CDF and PDF of the best-port amplitude")
    _add_system_arguments(distribution)
    distribution.add_argument(
        "--method",
        type=str,
        default="mvti",
        choices=["exact", "mvti", "empirical"],
        help="Evaluation method",
    )
    distribution.add_argument(
        "--r-min", type=float, default=0.0, help="First amplitude of the grid (linear)"
    )
    distribution.add_argument(
        "--r-max",
        type=Optional[float],
        default=None,
        help="Last amplitude of the grid (linear), 4 sigma when omitted",
    )
    distribution.add_argument("--points", type=int, default=200, help="Grid size (count)")
    _add_mc_arguments(distribution, trials=100_000)

    bler = ArgumentParser(description="BLER upper bounds")
    _add_system_arguments(bler)
    bler.add_argument(
        "--kind",
        type=str,
        default="statistical",
        choices=["conditional", "statistical", "l-antenna", "random-coding", "all"],
        help="Bound to evaluate",
    )
    _add_snr_sweep(bler)
    bler.add_argument(
        "--g-amp",
        type=float,
        default=1.0,
        help="Selected-port amplitude |g| of the conditional bound (linear)",
    )
    bler.add_argument(
        "--antennas", type=int, default=1, help="Antennas L of the benchmark (count)"
    )
    bler.add_argument(
        "--density",
        type=str,
        default="mvti",
        choices=["exact", "mvti"],
        help="Amplitude density of the statistical bound",
    )

    outage = ArgumentParser(description="Outage probability of FAS and of L-antenna MRC")
    _add_system_arguments(outage)
    outage.add_argument(
        "--gamma-th", type=float, required=True, help="SINR threshold (linear)"
    )
    _add_snr_sweep(outage)
    outage.add_argument(
        "--correlation-mode",
        type=str,
        default="mean",
        choices=["mean", "max"],
        help="Codeword correlation used in the SINR bound",
    )
    outage.add_argument(
        "--antennas",
        type=int,
        default=0,
        help="Antennas L of the MRC benchmark (count), 0 skips it",
    )

    mc = ArgumentParser(description="Monte-Carlo oracles")
    _add_system_arguments(mc)
    mc.add_argument(
        "--quantity",
        type=str,
        required=True,
        choices=["correlation", "gfas", "sinr-outage", "sinr-ratio", "ml-bler"],
        help="Simulated quantity",
    )
    mc.add_argument(
        "--gamma-th",
        type=float,
        default=1e-3,
        help="SINR threshold of sinr-outage (linear)",
    )
    mc.add_argument(
        "--codebook-size",
        type=Optional[int],
        default=None,
        help="Codebook size of ml-bler (count), 2U when omitted",
    )
    _add_mc_arguments(mc, trials=2000)

    sweep = ArgumentParser(description="Figure-style parameter sweeps")
    sweep.add_argument(
        "--preset", type=Optional[str], default=None, help="Name of a shipped sweep"
    )
    sweep.add_argument(
        "--spec", type=Optional[str], default=None, help="SweepSpec JSON file"
    )
    sweep.add_argument(
        "--seed",
        type=Optional[int],
        default=None,
        help="Overrides the seed of the Monte-Carlo series",
    )
    sweep.add_argument(
        "--trials",
        type=Optional[int],
        default=None,
        help="Overrides the Monte-Carlo trials (count)",
    )
    sweep.add_argument(
        "--workers", type=int, default=1, help="Cells evaluated concurrently (count)"
    )
    _add_output_arguments(sweep)

    validate = ArgumentParser(description="Analytic against reference checks")
    validate.add_argument(
        "--suite", type=str, default="all", choices=["all", *SUITES], help="Checks to run"
    )
    validate.add_argument("--seed", type=int, default=0, help="Seed of the random streams")
    validate.add_argument(
        "--log-level", type=str, default="WARNING", choices=LOG_LEVELS, help="Logging level"
    )

    subcommands.add_subcommand("correlation", correlation, help="Codeword correlation")
    subcommands.add_subcommand("distribution", distribution, help="Best-port amplitude")
    subcommands.add_subcommand("bler", bler, help="BLER bounds")
    subcommands.add_subcommand("outage", outage, help="Outage probability")
    subcommands.add_subcommand("mc", mc, help="Monte-Carlo simulation")
    subcommands.add_subcommand("sweep", sweep, help="Run a sweep")
    subcommands.add_subcommand("validate", validate, help="Run validation checks")
    return parser


def system_config(args: Namespace) -> SystemConfig:
    """
    SystemConfig from --config, overridden by every explicit flag.
    """
    if args.config is not None:
        config = SystemConfig.schema().loads(Path(args.config).read_text())
    else:
        config = SystemConfig()
    changes: dict[str, Any] = {
        field: getattr(args, flag)
        for flag, field in SYSTEM_FLAGS.items()
        if getattr(args, flag) is not None
    }
    if args.snr_db is not None:
        changes["snr_db"] = args.snr_db
    elif "channel_var" in changes:
        # a new sigma^2 keeps the SNR of the loaded configuration
        changes["snr_db"] = config.snr_db
    return config.with_updates(**changes) if changes else config


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text)


def _frame_text(frame: pd.DataFrame, fmt: str) -> str:
    if fmt == "json":
        return frame.to_json(orient="records", indent=2)
    return frame.to_csv(index=False, float_format="%.12g")


def _reports_text(reports: list[McReport], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([r.to_dict() for r in reports], indent=2)
    return _frame_text(pd.DataFrame([r.to_dict() for r in reports]), fmt)


def _snr_values(args: Namespace, config: SystemConfig) -> list[float]:
    return list(args.snr_sweep) if args.snr_sweep else [config.snr_db]


def _correlation_row(
    quantity: str, source: str, value: float, stderr: Any
) -> dict[str, Any]:
    return {"quantity": quantity, "source": source, "value": value, "stderr": stderr}


def run_correlation(args: Namespace) -> str:
    config = system_config(args)
    stats = analytic_correlation_stats(config.blocklength, config.n_users)
    rows = [
        _correlation_row("rho_bar", "analytic", stats.rho_bar, None),
        _correlation_row("rho_max", "analytic", stats.rho_max, None),
    ]
    if args.trials > 0:
        reports = mc_codeword_correlation(
            config.blocklength,
            config.n_users,
            args.trials,
            args.seed,
            sigma_c2=config.sigma_c2,
            n_workers=args.workers,
        )
        rows += [
            _correlation_row(r.quantity, "monte-carlo", r.estimate, r.stderr)
            for r in reports
        ]
    return _frame_text(pd.DataFrame(rows), args.format)


def run_distribution(args: Namespace) -> str:
    config = system_config(args)
    profile = profile_for(config)
    r_max = 4.0 * np.sqrt(config.channel_var) if args.r_max is None else args.r_max
    if args.points < 2 or not r_max > args.r_min >= 0:
        raise ValueError(
            f"Invalid grid: r_min={args.r_min}, r_max={r_max}, points={args.points}"
        )
    grid = np.linspace(args.r_min, r_max, args.points)
    if args.method == "empirical":
        result = empirical_distribution(
            config, profile, args.trials, args.seed, r_grid=grid, n_workers=args.workers
        )
    else:
        result = evaluate_distribution(config, profile, grid, method=args.method)
    return _frame_text(result.to_dataframe(), args.format)


BLER_KINDS = ["conditional", "statistical", "l-antenna", "random-coding"]


def run_bler(args: Namespace) -> str:
    base = system_config(args)
    kinds = BLER_KINDS if args.kind == "all" else [args.kind]
    points: list[BlerPoint] = []
    for snr_db in _snr_values(args, base):
        config = base.with_snr_db(snr_db)
        for kind in kinds:
            if kind == "conditional":
                points.append(conditional_bler_fas(args.g_amp, config))
            elif kind == "statistical":
                profile = profile_for(config)
                points.append(statistical_bler_fas(config, profile, density=args.density))
            elif kind == "l-antenna":
                points.append(bler_l_antenna(args.antennas, config))
            else:
                points.append(random_coding_point(config))
    if args.format == "json":
        return json.dumps([p.to_dict() for p in points], indent=2)
    return bler_points_to_csv(points)


def run_outage(args: Namespace) -> str:
    base = system_config(args)
    profile = profile_for(base)
    points: list[OutagePoint] = []
    for snr_db in _snr_values(args, base):
        config = base.with_snr_db(snr_db)
        query = OutageQuery(args.gamma_th, config, args.correlation_mode)
        fas = outage_fas(query, profile)
        points.append(OutagePoint("snr_db", snr_db, f"fas_N{config.n_ports}", fas))
        if args.antennas > 0:
            mrc = outage_mrc(
                args.gamma_th,
                args.antennas,
                config.n_users,
                config.channel_var,
                config.noise_var,
            )
            points.append(OutagePoint("snr_db", snr_db, f"mrc_L{args.antennas}", mrc))
    if args.format == "json":
        return json.dumps([p.__dict__ for p in points], indent=2)
    return outage_points_to_csv(points)


def run_mc(args: Namespace) -> str:
    config = system_config(args)
    profile = profile_for(config)
    n, seed, workers = args.trials, args.seed, args.workers
    if args.quantity == "gfas":
        result = mc_gfas(config, profile, n, seed, n_workers=workers)
        return _frame_text(result.to_dataframe(), args.format)
    if args.quantity == "correlation":
        reports = list(
            mc_codeword_correlation(
                config.blocklength,
                config.n_users,
                n,
                seed,
                sigma_c2=config.sigma_c2,
                n_workers=workers,
            )
        )
    elif args.quantity == "sinr-outage":
        reports = [
            mc_sinr_outage(config, profile, args.gamma_th, n, seed, n_workers=workers)
        ]
    elif args.quantity == "sinr-ratio":
        reports = [mc_sinr_ratio(config, profile, n, seed, n_workers=workers)]
    else:
        reports = [
            mc_ml_bler_small(
                config,
                profile,
                n,
                seed,
                codebook_size=args.codebook_size,
                n_workers=workers,
            )
        ]
    return _reports_text(reports, args.format)


def run_sweep_command(args: Namespace) -> str:
    if (args.preset is None) == (args.spec is None):
        raise ValueError("Exactly one of --preset and --spec is required")
    spec = load_sweep_spec(args.preset if args.preset is not None else Path(args.spec))
    if args.seed is not None or args.trials is not None:
        current = spec.mc or McSpec()
        spec.mc = McSpec(
            n_trials=current.n_trials if args.trials is None else args.trials,
            seed=current.seed if args.seed is None else args.seed,
        )
    result = run_sweep(spec, n_workers=args.workers)
    logger.info(f"\n{result}")
    return result.to_json() if args.format == "json" else result.to_csv()


COMMANDS = {
    "correlation": run_correlation,
    "distribution": run_distribution,
    "bler": run_bler,
    "outage": run_outage,
    "mc": run_mc,
    "sweep": run_sweep_command,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        cfg = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INVALID
    name = cfg.subcommand
    args = getattr(cfg, name)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")

    try:
        if name == "validate":
            results = run_checks(args.suite, args.seed)
            print(format_report(results))
            return EXIT_OK if all(r.passed for r in results) else EXIT_CHECKS_FAILED
        text = COMMANDS[name](args)
    except QuadratureError as e:
        print(
            f"error: {e} (estimate {e.estimate:.6g}, "
            f"error bound {e.error_bound:.3g}, depth {e.depth})",
            file=sys.stderr,
        )
        return EXIT_NUMERIC
    except (ValueError, ValidationError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    _emit(text, args.out)
    return EXIT_OK


def cli_main() -> None:
    sys.exit(main())

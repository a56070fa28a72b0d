"""Command-line runner: interference tables, figure data and allocation reports."""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from d2d_overlay.allocation import AllocationProblem, omega_factors, solve
from d2d_overlay.config import DEFAULT_PRESET, ScenarioConfig, load_config
from d2d_overlay.figures import FigureId, build_figure
from d2d_overlay.interference.cache import TableCache, table_key, write_atomic
from d2d_overlay.interference.engine import build_table
from d2d_overlay.interference.tables import InterferenceTable
from d2d_overlay.models import AllocationReport
from d2d_overlay.rate import ResourceWindow, total_bits, useful_symbols_for
from d2d_overlay.waveforms import WaveformKind

# Default logging config (may be reconfigured in main() with file handler)
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)


def configure_logging(log_file: Path | None = None, verbose: bool = False) -> None:
    """Configure logging with optional file output."""
    level = logging.DEBUG if verbose else logging.INFO
    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

        logger.info(f"Logging to file: {log_file}")


# =============================================================================
# PIPELINE
# =============================================================================


def ensure_table(
    config: ScenarioConfig, kind: WaveformKind | None = None, force_rebuild: bool = False
) -> tuple[InterferenceTable, Path]:
    """Load the cached table of one waveform, building it when missing."""
    waveform = config.waveform_config(kind)
    incumbent = config.incumbent_config()
    distances, dt_grid, df_grid = config.distances(), config.dt_grid(), config.df_grid()

    key = table_key(
        waveform, incumbent, distances, dt_grid, df_grid, seed=config.seed, trials=config.trials
    )
    cache = TableCache(config.output.table_dir)
    table = cache.get_or_build(
        key,
        lambda: build_table(
            waveform,
            incumbent,
            distances,
            dt_grid,
            df_grid,
            df_max=config.offsets.df_max,
            trials=config.trials,
            seed=config.seed,
        ),
        force_rebuild=force_rebuild,
    )
    return table, cache.path_for(key)


def run_table(config: ScenarioConfig, force_rebuild: bool = False) -> Path:
    """Build (or reuse) the interference table of the configured waveform."""
    _, path = ensure_table(config, force_rebuild=force_rebuild)
    return path


def run_figure(
    config: ScenarioConfig,
    figure: FigureId | str,
    out: Path | None = None,
    force_rebuild: bool = False,
) -> Path:
    """Write one figure's data as CSV, building any missing tables."""
    figure = FigureId(figure)
    tables = {
        kind: ensure_table(config, kind, force_rebuild=force_rebuild)[0] for kind in WaveformKind
    }
    frame = build_figure(figure, tables, config)

    path = out or config.output.out_dir / f"{figure.value}.csv"
    write_atomic(path, frame.to_csv(index=False))
    logger.info(f"Wrote {figure.value} data to {path}")
    return path


def allocation_report(config: ScenarioConfig, force_rebuild: bool = False) -> AllocationReport:
    """Solve the configured scenario and collect everything the report records."""
    band_map = config.band_map()
    override = config.budgets.omega_override
    if override is not None:
        omegas = np.asarray(override, dtype=float)
    else:
        table, _ = ensure_table(config, force_rebuild=force_rebuild)
        omegas = omega_factors(table, band_map)

    problem = AllocationProblem(
        omegas=omegas,
        total_power=config.budgets.total_power,
        interference_threshold=config.budgets.interference_threshold,
        noise=config.budgets.noise,
    )
    result = solve(problem)

    window = ResourceWindow(config.window.free_symbols, len(band_map.free))
    waveform = config.waveform_config()
    n_useful = useful_symbols_for(waveform, window, config.incumbent_config())
    interference = problem.interference(result.powers)

    return AllocationReport(
        waveform=waveform.kind.value,
        free_subcarriers=list(band_map.free),
        omegas=problem.omegas.tolist(),
        powers=result.powers.tolist(),
        alpha=result.alpha,
        beta=result.beta,
        binding=result.binding.value,
        total_power=result.total_power,
        power_utilization=result.total_power / problem.total_power,
        interference=interference,
        interference_utilization=interference / problem.interference_threshold,
        free_symbols=window.free_symbols,
        useful_symbols=n_useful,
        total_bits=total_bits(result, problem, n_useful),
        seed=config.seed,
    )


def run_allocation(
    config: ScenarioConfig, out: Path | None = None, force_rebuild: bool = False
) -> Path:
    """Write the allocation report of the configured scenario as JSON."""
    report = allocation_report(config, force_rebuild=force_rebuild)
    path = out or config.output.out_dir / f"allocation-{report.waveform}.json"
    write_atomic(path, report.model_dump_json(indent=2))
    logger.info(
        f"Allocated {report.total_power:.4g} W ({report.binding} binding), "
        f"{report.total_bits:.6g} bits; report at {path}"
    )
    return path


# =============================================================================
# CLI
# =============================================================================


def scenario_from_args(args: argparse.Namespace) -> ScenarioConfig:
    """Load the scenario and apply command-line overrides."""
    config = load_config(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    if getattr(args, "waveform", None):
        waveform = config.waveform.model_copy(update={"kind": WaveformKind(args.waveform)})
        config = config.model_copy(update={"waveform": waveform})
    if args.command == "table" and args.out is not None:
        output = config.output.model_copy(update={"table_dir": args.out})
        config = config.model_copy(update={"output": output})
    return config


def cmd_table(config: ScenarioConfig, args: argparse.Namespace) -> int:
    """Build the interference table of one waveform."""
    path = run_table(config, force_rebuild=args.force_rebuild)
    print(f"Interference table: {path}")
    return 0


def cmd_figure(config: ScenarioConfig, args: argparse.Namespace) -> int:
    """Emit the data of one figure."""
    path = run_figure(config, args.figure, out=args.out, force_rebuild=args.force_rebuild)
    print(f"Figure data: {path}")
    return 0


def cmd_allocate(config: ScenarioConfig, args: argparse.Namespace) -> int:
    """Solve the power allocation of one scenario."""
    path = run_allocation(config, out=args.out, force_rebuild=args.force_rebuild)
    print(f"Allocation report: {path}")
    return 0


def scenario_options(suppress_defaults: bool = False) -> argparse.ArgumentParser:
    """
    Options accepted both before and after the command.

    Sub-command copies default to ``argparse.SUPPRESS`` so an option given
    before the command is not reset when the command omits it.
    """

    def default(value):
        return argparse.SUPPRESS if suppress_defaults else value

    options = argparse.ArgumentParser(add_help=False)
    options.add_argument(
        "--config",
        default=default(DEFAULT_PRESET),
        help=f"Scenario JSON file or shipped preset name (default: {DEFAULT_PRESET})",
    )
    options.add_argument(
        "--seed", type=int, default=default(None), help="Override the scenario seed"
    )
    options.add_argument(
        "--force-rebuild",
        action="store_true",
        default=default(False),
        help="Rebuild interference tables even when cached",
    )
    return options


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2d-overlay",
        description="D2D waveform coexistence with an OFDM incumbent",
        parents=[scenario_options()],
    )
    parser.add_argument(
        "--log-file",
        type=Path,
        default=None,
        help="Path to log file (logs to both console and file)",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable debug logging")

    subparsers = parser.add_subparsers(dest="command", required=True)
    waveforms = [kind.value for kind in WaveformKind]
    common = [scenario_options(suppress_defaults=True)]

    # table command
    table_parser = subparsers.add_parser(
        "table", help="Build an interference table", parents=common
    )
    table_parser.add_argument("--waveform", choices=waveforms, help="Waveform to tabulate")
    table_parser.add_argument("--out", type=Path, help="Table directory")

    # figure command
    figure_parser = subparsers.add_parser(
        "figure", help="Emit figure data as CSV", parents=common
    )
    figure_parser.add_argument(
        "--figure", required=True, choices=[figure.value for figure in FigureId]
    )
    figure_parser.add_argument("--out", type=Path, help="CSV output path")

    # allocate command
    allocate_parser = subparsers.add_parser(
        "allocate", help="Solve one power allocation", parents=common
    )
    allocate_parser.add_argument("--waveform", choices=waveforms, help="D2D waveform")
    allocate_parser.add_argument("--out", type=Path, help="Report output path")

    return parser


def main(argv: list[str] | None = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)

    if args.log_file or args.verbose:
        configure_logging(args.log_file, args.verbose)

    commands = {
        "table": cmd_table,
        "figure": cmd_figure,
        "allocate": cmd_allocate,
    }

    try:
        config = scenario_from_args(args)
        return commands[args.command](config, args)
    except (ValueError, ValidationError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

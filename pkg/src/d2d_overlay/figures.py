"""Plot-ready data for the interference and throughput figures."""

import logging
from collections.abc import Callable, Mapping
from concurrent.futures import ThreadPoolExecutor
from enum import Enum

import numpy as np
import pandas as pd

from d2d_overlay.allocation import AllocationProblem, omega_factors, solve
from d2d_overlay.config import ScenarioConfig
from d2d_overlay.interference.engine import Offset
from d2d_overlay.interference.tables import BandMap, InterferenceTable, total_interference
from d2d_overlay.rate import ResourceWindow, total_bits, useful_symbols_for
from d2d_overlay.waveforms import WaveformKind

logger = logging.getLogger(__name__)

# Powers below this are reported at this floor in dB
POWER_FLOOR = 1e-30

HEATMAP_DISTANCES = [d for d in range(-10, 11) if d != 0]
PROFILE_DISTANCES = list(range(-20, 21))


class FigureId(Enum):
    """Figures whose data the runner can emit."""

    FIG3 = "fig3"  # Total injected interference vs timing offset
    FIG4 = "fig4"  # Interference per distance and timing offset
    FIG5A = "fig5a"  # Mean over timing offsets vs distance
    FIG5B = "fig5b"  # Worst case over timing offsets vs distance
    FIG6A = "fig6a"  # Bits vs window length, loose interference threshold
    FIG6B = "fig6b"  # Bits vs window length, strict interference threshold
    FIG7 = "fig7"  # Bits vs interference threshold at one TTI


def to_db(values) -> np.ndarray:
    """Linear power to dB, clamped at the power floor."""
    return 10 * np.log10(np.maximum(np.asarray(values, dtype=float), POWER_FLOOR))


def _centre_only(band_map: BandMap) -> np.ndarray:
    powers = np.zeros(len(band_map.free))
    powers[len(band_map.free) // 2] = 1.0
    return powers


def _fig3(table: InterferenceTable, config: ScenarioConfig) -> pd.DataFrame:
    band_map = config.band_map()
    powers = _centre_only(band_map)
    totals = [
        total_interference(table, powers, band_map, Offset(int(delta_t), 0.0))
        for delta_t in table.dt_grid
    ]
    return pd.DataFrame(
        {
            "waveform": table.waveform.value,
            "delta_t_samples": table.dt_grid,
            "interference_db": to_db(totals),
        }
    )


def _slice_at_zero_df(table: InterferenceTable, distances: list[int]) -> np.ndarray:
    """Values at delta_f = 0, shape (len(distances), len(dt_grid))."""
    rows = table.distance_indices(distances)
    return table.values[rows, :, table.df_index(0.0)]


def _fig4(table: InterferenceTable, config: ScenarioConfig) -> pd.DataFrame:
    values = _slice_at_zero_df(table, HEATMAP_DISTANCES)
    distance, delta_t = np.meshgrid(HEATMAP_DISTANCES, table.dt_grid, indexing="ij")
    return pd.DataFrame(
        {
            "waveform": table.waveform.value,
            "delta_t_samples": delta_t.ravel(),
            "distance": distance.ravel(),
            "interference_db": to_db(values.ravel()),
        }
    )


def _profile(statistic: str) -> Callable[[InterferenceTable, ScenarioConfig], pd.DataFrame]:
    def build(table: InterferenceTable, config: ScenarioConfig) -> pd.DataFrame:
        values = _slice_at_zero_df(table, PROFILE_DISTANCES)
        reduced = values.mean(axis=1) if statistic == "mean" else values.max(axis=1)
        return pd.DataFrame(
            {
                "waveform": table.waveform.value,
                "distance": PROFILE_DISTANCES,
                f"{statistic}_db": to_db(reduced),
            }
        )

    return build


def _omegas(table: InterferenceTable, config: ScenarioConfig) -> np.ndarray:
    override = config.budgets.omega_override
    if override is not None:
        return np.asarray(override, dtype=float)
    return omega_factors(table, config.band_map())


def _problem(omegas: np.ndarray, config: ScenarioConfig, threshold: float) -> AllocationProblem:
    return AllocationProblem(
        omegas=omegas,
        total_power=config.budgets.total_power,
        interference_threshold=threshold,
        noise=config.budgets.noise,
    )


def _bits_vs_window(index: int) -> Callable[[InterferenceTable, ScenarioConfig], pd.DataFrame]:
    def build(table: InterferenceTable, config: ScenarioConfig) -> pd.DataFrame:
        threshold = config.budgets.window_thresholds[index]
        problem = _problem(_omegas(table, config), config, threshold)
        result = solve(problem)
        waveform = config.waveform_config(table.waveform)
        incumbent = config.incumbent_config()
        free = len(config.band_map().free)
        bits = [
            total_bits(
                result,
                problem,
                useful_symbols_for(waveform, ResourceWindow(n_f, free), incumbent),
            )
            for n_f in config.window.sweep
        ]
        return pd.DataFrame(
            {
                "waveform": table.waveform.value,
                "free_symbols": config.window.sweep,
                "interference_threshold_w": threshold,
                "bits": bits,
            }
        )

    return build


def _fig7(table: InterferenceTable, config: ScenarioConfig) -> pd.DataFrame:
    omegas = _omegas(table, config)
    window = ResourceWindow(config.window.free_symbols, len(config.band_map().free))
    n_useful = useful_symbols_for(
        config.waveform_config(table.waveform), window, config.incumbent_config()
    )
    thresholds = config.budgets.threshold_sweep()
    bits = []
    for threshold in thresholds:
        problem = _problem(omegas, config, float(threshold))
        bits.append(total_bits(solve(problem), problem, n_useful))
    return pd.DataFrame(
        {
            "waveform": table.waveform.value,
            "interference_threshold_dbw": np.round(10 * np.log10(thresholds), 9),
            "bits": bits,
        }
    )


BUILDERS: dict[FigureId, Callable[[InterferenceTable, ScenarioConfig], pd.DataFrame]] = {
    FigureId.FIG3: _fig3,
    FigureId.FIG4: _fig4,
    FigureId.FIG5A: _profile("mean"),
    FigureId.FIG5B: _profile("max"),
    FigureId.FIG6A: _bits_vs_window(0),
    FigureId.FIG6B: _bits_vs_window(1),
    FigureId.FIG7: _fig7,
}


def build_figure(
    figure: FigureId | str,
    tables: Mapping[WaveformKind, InterferenceTable],
    config: ScenarioConfig,
) -> pd.DataFrame:
    """
    Assemble one figure's data from per-waveform interference tables.

    Waveforms are processed in parallel and concatenated in mapping order.

    Raises:
        ValueError: Unknown figure id or no tables given.
    """
    figure = FigureId(figure)
    if not tables:
        raise ValueError("No interference tables to build a figure from")
    if figure in (FigureId.FIG6A, FigureId.FIG6B) and len(config.budgets.window_thresholds) < 2:
        raise ValueError("budgets.window_thresholds needs two entries for the window figures")

    builder = BUILDERS[figure]
    with ThreadPoolExecutor() as executor:
        frames = list(executor.map(lambda table: builder(table, config), tables.values()))

    logger.info(f"Built {figure.value} data for {len(frames)} waveforms")
    return pd.concat(frames, ignore_index=True)

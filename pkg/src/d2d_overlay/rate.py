"""Useful D2D symbols in a free resource window and the bits they carry."""

from dataclasses import dataclass
from fractions import Fraction
from math import floor

import numpy as np

from d2d_overlay.allocation import AllocationProblem, AllocationResult, objective
from d2d_overlay.interference.engine import IncumbentConfig
from d2d_overlay.waveforms import WaveformConfig, WaveformKind


@dataclass(frozen=True)
class ResourceWindow:
    """Free time-frequency window: N_f incumbent symbols by M_f subcarriers."""

    free_symbols: int
    free_subcarriers: int

    def __post_init__(self) -> None:
        if self.free_symbols < 1:
            raise ValueError(f"free_symbols must be >= 1, got {self.free_symbols}")
        if self.free_subcarriers < 1:
            raise ValueError(f"free_subcarriers must be >= 1, got {self.free_subcarriers}")


def useful_symbols(
    kind: WaveformKind | str,
    window: ResourceWindow,
    incumbent: IncumbentConfig,
    K: int = 1,
    N_b: int = 1,
) -> int:
    """
    Data symbols that fit in the window once filter transients are paid.

    Floors are evaluated on exact fractions; negative counts clamp to 0.

    Args:
        kind: D2D waveform.
        window: Free resource window.
        incumbent: Incumbent numerology (sets the window length in samples).
        K: Overlap factor of FMT or OQAM.
        N_b: GFDM block size in symbols.
    """
    kind = WaveformKind(kind)
    n_f = window.free_symbols
    M, cp = incumbent.M, incumbent.cp_samples
    # Window length in D2D symbol periods of M samples
    span = Fraction(n_f * (M + cp), M)

    match kind:
        case WaveformKind.OFDM:
            count = n_f
        case WaveformKind.FMT:
            count = n_f - K + 1
        case WaveformKind.OQAM:
            count = floor(span - K + Fraction(1, 2))
        case WaveformKind.LAPPED:
            count = floor(span - 1)
        case WaveformKind.GFDM:
            if N_b < 1:
                raise ValueError(f"N_b must be >= 1, got {N_b}")
            count = N_b * floor(Fraction(n_f * (M + cp), N_b * M + cp))

    return max(0, count)


def useful_symbols_for(
    config: WaveformConfig, window: ResourceWindow, incumbent: IncumbentConfig
) -> int:
    """useful_symbols with K and N_b taken from a waveform configuration."""
    return useful_symbols(
        config.kind, window, incumbent, K=config.overlap_factor, N_b=config.block_symbols
    )


def total_bits(result: AllocationResult, problem: AllocationProblem, n_useful: int) -> float:
    """Bits carried: n_useful times the per-symbol sum rate of the allocation."""
    if n_useful < 0:
        raise ValueError(f"n_useful must be >= 0, got {n_useful}")
    if n_useful == 0:
        return 0.0
    return n_useful * objective(problem, np.asarray(result.powers))

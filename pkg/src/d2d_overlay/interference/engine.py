"""Interference a misaligned D2D subcarrier injects into an OFDM receiver.

The incumbent receiver drops each CP and takes an M-point DFT of the next M
samples. The D2D stream is delayed by delta_t samples and rotated by
delta_f subcarrier spacings before the DFT; the squared magnitude at bin l,
summed over the N observation windows, is the injected interference.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import fft

from d2d_overlay.interference.tables import InterferenceTable
from d2d_overlay.waveforms import (
    ComplexSignal,
    WaveformConfig,
    mean_symbol_power,
    random_symbols,
    symbol_basis,
)

logger = logging.getLogger(__name__)

# Monte-Carlo realizations synthesized per matrix product
MONTE_CARLO_BATCH = 256


@dataclass(frozen=True)
class IncumbentConfig:
    """Numerology of the incumbent OFDM receiver."""

    M: int = 180
    cp_samples: int = 12
    observation_symbols: int = 20  # N
    subcarrier_spacing: float = 15e3

    def __post_init__(self) -> None:
        if self.M < 1:
            raise ValueError(f"Incumbent M must be > 0, got {self.M}")
        if self.cp_samples < 0:
            raise ValueError(f"Incumbent cp_samples must be >= 0, got {self.cp_samples}")
        if self.observation_symbols < 1:
            raise ValueError(
                f"observation_symbols must be >= 1, got {self.observation_symbols}"
            )
        if self.subcarrier_spacing <= 0:
            raise ValueError(f"subcarrier_spacing must be > 0, got {self.subcarrier_spacing}")

    @property
    def symbol_duration(self) -> float:
        """T_s = 1 / ΔF in seconds."""
        return 1.0 / self.subcarrier_spacing

    @property
    def symbol_length(self) -> int:
        """Samples per OFDM symbol including the CP."""
        return self.M + self.cp_samples

    @property
    def max_timing_offset(self) -> int:
        """Largest |delta_t|, half an OFDM symbol."""
        return self.symbol_length // 2

    def window_starts(self) -> np.ndarray:
        """First sample of each DFT window (CP skipped)."""
        return np.arange(self.observation_symbols) * self.symbol_length + self.cp_samples


@dataclass(frozen=True)
class Offset:
    """Timing offset in samples and frequency offset in subcarrier spacings."""

    delta_t: int = 0
    delta_f: float = 0.0

    def __post_init__(self) -> None:
        if int(self.delta_t) != self.delta_t:
            raise ValueError(f"delta_t must be an integer number of samples, got {self.delta_t}")
        object.__setattr__(self, "delta_t", int(self.delta_t))
        object.__setattr__(self, "delta_f", float(self.delta_f))

    def validate(self, incumbent: IncumbentConfig, df_max: float = 1.0) -> None:
        """Check the offset against the misalignment ranges."""
        if abs(self.delta_t) > incumbent.max_timing_offset:
            raise ValueError(
                f"|delta_t|={abs(self.delta_t)} exceeds half a symbol "
                f"({incumbent.max_timing_offset} samples)"
            )
        if abs(self.delta_f) > df_max + 1e-12:
            raise ValueError(f"|delta_f|={abs(self.delta_f)} exceeds df_max={df_max}")


@dataclass(frozen=True, eq=False)
class InterferenceStream:
    """D2D envelope basis on one subcarrier, scaled to 1 W steady-state power.

    Row n of ``basis`` is the contribution of symbol n; ``origin`` is the
    column aligned with incumbent sample 0.
    """

    config: WaveformConfig
    basis: np.ndarray
    origin: int

    @property
    def n_symbols(self) -> int:
        return self.basis.shape[0]

    def signal(self, symbols: np.ndarray) -> ComplexSignal:
        """Realization of the stream for one symbol vector."""
        samples = np.asarray(symbols, dtype=complex) @ self.basis
        return ComplexSignal(
            samples=samples, sample_period=self.config.sample_period, origin=self.origin
        )


def interference_stream(
    config: WaveformConfig, incumbent: IncumbentConfig, max_delay: int
) -> InterferenceStream:
    """
    Build a stream covering the observation windows at any |delta_t| <= max_delay.

    Frames overlapping the observed span are all present, so every window sees
    the stream in steady state rather than a filter transient.
    """
    if max_delay < 0:
        raise ValueError(f"max_delay must be >= 0, got {max_delay}")

    first = incumbent.cp_samples - max_delay
    last = incumbent.observation_symbols * incumbent.symbol_length + max_delay
    frame, span = config.frame_length, config.frame_span

    first_frame = (first - span) // frame
    last_frame = -(-last // frame)
    n_frames = last_frame - first_frame + 1

    basis = symbol_basis(config, n_frames * config.frame_symbols)
    basis /= np.sqrt(mean_symbol_power(config))
    return InterferenceStream(config=config, basis=basis, origin=-first_frame * frame)


# =============================================================================
# RECEIVER
# =============================================================================


def _sample_indices(incumbent: IncumbentConfig, origin: int, delta_t: int) -> np.ndarray:
    """Stream indices read by each DFT window, shape (N, M)."""
    k = incumbent.window_starts()[:, None] + np.arange(incumbent.M)[None, :]
    return origin + k - delta_t


def _window_spectra(
    samples: np.ndarray, origin: int, incumbent: IncumbentConfig, offset: Offset
) -> np.ndarray:
    """
    Receiver DFT of every observation window.

    Args:
        samples: Stream samples, any leading batch axes.
        origin: Index of incumbent sample 0 in the last axis.
        incumbent: Receiver numerology.
        offset: Misalignment applied to the stream.

    Returns:
        Array of shape (..., N, M); bin l is the projection onto subcarrier l.
    """
    indices = _sample_indices(incumbent, origin, offset.delta_t)
    if indices.min() < 0 or indices.max() >= samples.shape[-1]:
        raise ValueError(
            f"Signal too short: observation needs samples {indices.min()}..{indices.max()}, "
            f"signal has {samples.shape[-1]}"
        )

    received = samples[..., indices]
    if offset.delta_f:
        k = indices - origin + offset.delta_t
        received = received * np.exp(2j * np.pi * k * offset.delta_f / incumbent.M)
    return fft.fft(received, axis=-1) / incumbent.M


def instantaneous_interference(
    signal: ComplexSignal, incumbent: IncumbentConfig, l: int, offset: Offset
) -> float:
    """Energy captured at incumbent subcarrier l over the N observation windows."""
    if not 0 <= l < incumbent.M:
        raise ValueError(f"Incumbent subcarrier {l} out of range [0, {incumbent.M})")
    spectra = _window_spectra(signal.samples, signal.origin, incumbent, offset)
    return float(np.sum(np.abs(spectra[:, l]) ** 2))


def _active_slice(
    stream: InterferenceStream, incumbent: IncumbentConfig, delta_t: int
) -> tuple[np.ndarray, np.ndarray, int]:
    """
    Restrict the stream to the samples read at one timing offset.

    Returns:
        Mask of symbols reaching the windows, their basis columns, and the
        origin within those columns.
    """
    indices = _sample_indices(incumbent, stream.origin, delta_t)
    lo, hi = int(indices.min()), int(indices.max()) + 1
    if lo < 0 or hi > stream.basis.shape[1]:
        raise ValueError(f"delta_t={delta_t} outside the stream built for this table")
    columns = stream.basis[:, lo:hi]
    reached = np.any(columns != 0, axis=1)
    return reached, columns[reached], stream.origin - lo


def _analytic_powers(
    stream: InterferenceStream,
    incumbent: IncumbentConfig,
    delta_t: int,
    df_grid: np.ndarray,
) -> np.ndarray:
    """Mean power per bin for each delta_f, shape (M, len(df_grid))."""
    _, columns, origin = _active_slice(stream, incumbent, delta_t)
    powers = np.empty((incumbent.M, len(df_grid)))
    for j, delta_f in enumerate(df_grid):
        spectra = _window_spectra(columns, origin, incumbent, Offset(delta_t, delta_f))
        powers[:, j] = np.sum(np.abs(spectra) ** 2, axis=(0, 1))
    return powers / incumbent.observation_symbols


def _monte_carlo_powers(
    stream: InterferenceStream,
    incumbent: IncumbentConfig,
    delta_t: int,
    df_grid: np.ndarray,
    trials: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sample mean of the per-bin interference over random symbol draws."""
    reached, columns, origin = _active_slice(stream, incumbent, delta_t)
    totals = np.zeros((incumbent.M, len(df_grid)))

    done = 0
    while done < trials:
        batch = min(MONTE_CARLO_BATCH, trials - done)
        symbols = random_symbols(stream.config.kind, rng, (batch, stream.n_symbols))
        samples = symbols[:, reached] @ columns
        for j, delta_f in enumerate(df_grid):
            spectra = _window_spectra(samples, origin, incumbent, Offset(delta_t, delta_f))
            totals[:, j] += np.sum(np.abs(spectra) ** 2, axis=(0, 1))
        done += batch

    return totals / trials / incumbent.observation_symbols


def mean_interference(
    config: WaveformConfig,
    incumbent: IncumbentConfig,
    distance: int,
    offset: Offset,
    trials: int,
    seed: int,
) -> float:
    """
    Monte-Carlo mean interference at subcarrier distance d = m - l.

    Each trial synthesizes a fresh symbol stream from ``seed`` and evaluates
    the receiver on it; the result is averaged over trials and divided by N.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")

    stream = interference_stream(config, incumbent, abs(offset.delta_t))
    rng = np.random.default_rng(seed)
    powers = _monte_carlo_powers(
        stream, incumbent, offset.delta_t, np.array([offset.delta_f]), trials, rng
    )
    return float(powers[(-distance) % incumbent.M, 0])


def analytic_mean_interference(
    config: WaveformConfig, incumbent: IncumbentConfig, distance: int, offset: Offset
) -> float:
    """
    Exact mean interference at subcarrier distance d = m - l.

    The receiver output is linear in i.i.d. unit-variance symbols, so its mean
    power is the sum of squared per-symbol projection coefficients.
    """
    stream = interference_stream(config, incumbent, abs(offset.delta_t))
    powers = _analytic_powers(stream, incumbent, offset.delta_t, np.array([offset.delta_f]))
    return float(powers[(-distance) % incumbent.M, 0])


# =============================================================================
# TABLES
# =============================================================================


def build_table(
    config: WaveformConfig,
    incumbent: IncumbentConfig,
    distances,
    dt_grid,
    df_grid,
    *,
    df_max: float = 1.0,
    trials: int | None = None,
    seed: int = 0,
    workers: int | None = None,
) -> InterferenceTable:
    """
    Tabulate mean interference over (distance, delta_t, delta_f).

    Every distance comes out of the same receiver DFT, so one task per timing
    offset fills a whole (distance, delta_f) slab.

    Args:
        config: D2D waveform.
        incumbent: Receiver numerology.
        distances: Subcarrier distances d = m - l, increasing integers.
        dt_grid: Timing offsets in samples.
        df_grid: Frequency offsets in subcarrier spacings.
        df_max: Largest accepted |delta_f|.
        trials: None for the analytic path, else Monte-Carlo trials per cell.
        seed: Seed of the Monte-Carlo draws.
        workers: Thread count, None for the executor default.

    Returns:
        The complete table; any failing cell aborts the build.
    """
    distances = np.asarray(list(distances), dtype=int)
    dt_grid = np.asarray(list(dt_grid), dtype=int)
    df_grid = np.asarray(list(df_grid), dtype=float)
    if not (distances.size and dt_grid.size and df_grid.size):
        raise ValueError("Table grids must be non-empty")
    if trials is not None and trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    for delta_t in dt_grid:
        for delta_f in (df_grid.min(), df_grid.max()):
            Offset(int(delta_t), float(delta_f)).validate(incumbent, df_max)

    cells = distances.size * dt_grid.size * df_grid.size
    mode = "analytic" if trials is None else f"{trials} trials"
    logger.info(f"Building {config.kind.value} interference table: {cells} cells ({mode})")
    started = time.perf_counter()

    stream = interference_stream(config, incumbent, int(np.max(np.abs(dt_grid))))

    def slab(index: int) -> np.ndarray:
        delta_t = int(dt_grid[index])
        if trials is None:
            return _analytic_powers(stream, incumbent, delta_t, df_grid)
        rng = np.random.default_rng([seed, index])
        return _monte_carlo_powers(stream, incumbent, delta_t, df_grid, trials, rng)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        slabs = list(executor.map(slab, range(dt_grid.size)))

    bins = (-distances) % incumbent.M
    values = np.stack([s[bins, :] for s in slabs], axis=1)

    elapsed = time.perf_counter() - started
    logger.info(f"Built {config.kind.value} interference table in {elapsed:.1f}s")

    return InterferenceTable(
        waveform=config.kind,
        distances=distances,
        dt_grid=dt_grid,
        df_grid=df_grid,
        values=values,
        incumbent=incumbent,
        waveform_params=config.describe(),
        seed=seed,
        trials=trials,
    )

"""Tabulated mean interference and the lookups that consume it."""

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from d2d_overlay.waveforms import WaveformKind

if TYPE_CHECKING:
    from d2d_overlay.interference.engine import IncumbentConfig, Offset

logger = logging.getLogger(__name__)

# Effective distances closer than this are the same table point
NU_DECIMALS = 9


@dataclass(frozen=True, eq=False)
class InterferenceTable:
    """Mean interference indexed by (distance, delta_t, delta_f), in W per W."""

    waveform: WaveformKind
    distances: np.ndarray
    dt_grid: np.ndarray
    df_grid: np.ndarray
    values: np.ndarray
    incumbent: "IncumbentConfig"
    waveform_params: dict = field(default_factory=dict)
    seed: int = 0
    trials: int | None = None  # None for analytic tables

    def __post_init__(self) -> None:
        distances = np.asarray(self.distances, dtype=int)
        dt_grid = np.asarray(self.dt_grid, dtype=int)
        df_grid = np.asarray(self.df_grid, dtype=float)
        values = np.asarray(self.values, dtype=float)

        for name, grid in (("distances", distances), ("dt_grid", dt_grid), ("df_grid", df_grid)):
            if grid.ndim != 1 or grid.size == 0:
                raise ValueError(f"{name} must be a non-empty vector")
            if np.any(np.diff(grid) <= 0):
                raise ValueError(f"{name} must be strictly increasing")

        expected = (distances.size, dt_grid.size, df_grid.size)
        if values.shape != expected:
            raise ValueError(f"Table values have shape {values.shape}, expected {expected}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("Table values must be finite and non-negative")

        for name, array in (
            ("distances", distances),
            ("dt_grid", dt_grid),
            ("df_grid", df_grid),
            ("values", values),
        ):
            array.flags.writeable = False
            object.__setattr__(self, name, array)
        object.__setattr__(self, "waveform", WaveformKind(self.waveform))

    @property
    def spans_full_period(self) -> bool:
        """True when the effective distances cover a whole DFT period."""
        nu = self.distances[:, None] + self.df_grid[None, :]
        return float(nu.max() - nu.min()) >= self.incumbent.M

    def dt_index(self, delta_t: int) -> int:
        """Position of an exact delta_t grid point."""
        matches = np.flatnonzero(self.dt_grid == delta_t)
        if matches.size == 0:
            raise ValueError(f"delta_t={delta_t} is not on the table grid")
        return int(matches[0])

    def df_index(self, delta_f: float) -> int:
        """Position of an exact delta_f grid point."""
        matches = np.flatnonzero(np.isclose(self.df_grid, delta_f, rtol=0.0, atol=1e-9))
        if matches.size == 0:
            raise ValueError(f"delta_f={delta_f} is not on the table grid")
        return int(matches[0])

    def distance_indices(self, distances) -> np.ndarray:
        """Row of each distance, wrapping by M when the table spans a period."""
        distances = np.asarray(distances, dtype=int)
        first = int(self.distances[0])
        if self.distances.size >= self.incumbent.M and np.all(np.diff(self.distances) == 1):
            distances = first + (distances - first) % self.incumbent.M
        rows = distances - first
        inside = (rows >= 0) & (rows < self.distances.size)
        clipped = np.clip(rows, 0, self.distances.size - 1)
        if not np.all(inside) or np.any(self.distances[clipped] != distances):
            raise ValueError(
                f"Distances outside table range [{first}, {int(self.distances[-1])}]"
            )
        return rows

    def mean_over_dt(self, delta_f: float = 0.0) -> np.ndarray:
        """Mean over the timing grid at one delta_f, one value per distance."""
        return self.values[:, :, self.df_index(delta_f)].mean(axis=1)

    def max_over_dt(self, delta_f: float = 0.0) -> np.ndarray:
        """Worst case over the timing grid at one delta_f, one value per distance."""
        return self.values[:, :, self.df_index(delta_f)].max(axis=1)

    def worst_case(self) -> np.ndarray:
        """Worst case over every timing and frequency offset, one value per distance."""
        return self.values.max(axis=(1, 2))


@dataclass(frozen=True)
class BandMap:
    """Disjoint free (D2D) and incumbent subcarrier index sets."""

    free: tuple[int, ...]
    incumbent: tuple[int, ...]

    def __post_init__(self) -> None:
        free = tuple(int(m) for m in self.free)
        incumbent = tuple(int(m) for m in self.incumbent)
        if not free:
            raise ValueError("Free band must contain at least one subcarrier")
        overlap = sorted(set(free) & set(incumbent))
        if overlap:
            raise ValueError(f"Free and incumbent bands overlap at subcarriers {overlap}")
        object.__setattr__(self, "free", free)
        object.__setattr__(self, "incumbent", incumbent)

    @classmethod
    def centered(
        cls, n_subcarriers: int = 180, n_free: int = 12, start: int | None = None
    ) -> "BandMap":
        """
        Carve a contiguous free band out of the incumbent's subcarriers.

        Args:
            n_subcarriers: Total subcarriers before the carve-out.
            n_free: Width of the free band.
            start: First free subcarrier; centred when omitted.
        """
        if n_free < 1:
            raise ValueError(f"n_free must be >= 1, got {n_free}")
        if start is None:
            start = (n_subcarriers - n_free) // 2
        if start < 1 or start + n_free > n_subcarriers - 1:
            raise ValueError(
                f"Free band [{start}, {start + n_free}) must lie strictly inside "
                f"[0, {n_subcarriers})"
            )
        free = tuple(range(start, start + n_free))
        incumbent = tuple(m for m in range(n_subcarriers) if m not in free)
        return cls(free=free, incumbent=incumbent)

    def distance_matrix(self) -> np.ndarray:
        """d = m - l for every free m (rows) and incumbent l (columns)."""
        return np.subtract.outer(np.array(self.free), np.array(self.incumbent))


def _effective_axis(table: InterferenceTable, t_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Merge (distance, delta_f) points into one sorted effective-distance axis."""
    nu = (table.distances[:, None] + table.df_grid[None, :]).ravel()
    values = table.values[:, t_index, :].ravel()
    axis, inverse = np.unique(np.round(nu, NU_DECIMALS), return_inverse=True)
    merged = np.bincount(inverse, weights=values) / np.bincount(inverse)
    return axis, merged


def _lookup(table: InterferenceTable, nu: np.ndarray, t_index: int) -> np.ndarray:
    axis, merged = _effective_axis(table, t_index)
    nu = np.asarray(nu, dtype=float)
    if table.spans_full_period:
        nu = axis[0] + np.mod(nu - axis[0], table.incumbent.M)
    if nu.size and (nu.min() < axis[0] - 1e-9 or nu.max() > axis[-1] + 1e-9):
        raise ValueError(
            f"Effective distance outside table range [{axis[0]:g}, {axis[-1]:g}]"
        )
    return np.interp(nu, axis, merged)


def shift_lookup(table: InterferenceTable, distance: int, offset: "Offset") -> float:
    """
    Interference at a distance and offset, read off the effective distance d + delta_f.

    Off-grid delta_f values interpolate linearly between neighbouring
    effective distances. delta_t must be a grid point.
    """
    t_index = table.dt_index(offset.delta_t)
    return float(_lookup(table, np.array([distance + offset.delta_f]), t_index)[0])


def total_interference(
    table: InterferenceTable, powers, band_map: BandMap, offset: "Offset"
) -> float:
    """Interference the whole free band injects into the incumbent band, in W."""
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (len(band_map.free),):
        raise ValueError(
            f"Expected {len(band_map.free)} powers for the free band, got shape {powers.shape}"
        )
    if np.any(powers < 0):
        raise ValueError("Subcarrier powers must be non-negative")

    t_index = table.dt_index(offset.delta_t)
    per_pair = _lookup(table, band_map.distance_matrix() + offset.delta_f, t_index)
    return float(powers @ per_pair.sum(axis=1))

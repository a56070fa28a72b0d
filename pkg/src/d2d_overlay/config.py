"""Scenario configuration for the D2D overlay runner."""

import logging
from importlib import resources
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from d2d_overlay.interference.engine import IncumbentConfig
from d2d_overlay.interference.tables import BandMap
from d2d_overlay.waveforms import WaveformConfig, WaveformKind

logger = logging.getLogger(__name__)

DEFAULT_PRESET = "lte-15rb"


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class IncumbentSection(Section):
    """Incumbent OFDM numerology."""

    M: int = Field(180, ge=1)
    cp_samples: int = Field(12, ge=0)
    observation_symbols: int = Field(20, ge=1)
    subcarrier_spacing: float = Field(15e3, gt=0)


class WaveformSection(Section):
    """D2D waveform preset and its overrides."""

    kind: WaveformKind = WaveformKind.OQAM
    overlap_factor: int | None = Field(None, ge=1)
    rolloff: float = Field(0.2, ge=0, le=1)
    block_symbols: int = Field(5, ge=1)
    lapped_verbatim: bool = False


class BandSection(Section):
    """Incumbent and free band layout; explicit index lists win over the centred layout."""

    incumbent_subcarriers: int = Field(180, ge=3)
    free_subcarriers: int = Field(12, ge=1)
    start: int | None = None
    free_indices: list[int] | None = None
    incumbent_indices: list[int] | None = None

    def band_map(self) -> BandMap:
        if self.free_indices is not None or self.incumbent_indices is not None:
            if self.free_indices is None or self.incumbent_indices is None:
                raise ValueError("free_indices and incumbent_indices must be given together")
            return BandMap(free=tuple(self.free_indices), incumbent=tuple(self.incumbent_indices))
        return BandMap.centered(self.incumbent_subcarriers, self.free_subcarriers, self.start)

    @model_validator(mode="after")
    def check_layout(self) -> "BandSection":
        self.band_map()
        return self


class WindowSection(Section):
    """Free window length N_f and the N_f sweep of the bits-vs-window figures."""

    free_symbols: int = Field(14, ge=1)
    sweep: list[int] = Field(default_factory=lambda: list(range(1, 101)))

    @model_validator(mode="after")
    def check_sweep(self) -> "WindowSection":
        if not self.sweep or min(self.sweep) < 1:
            raise ValueError("window sweep must be non-empty with every N_f >= 1")
        return self


class BudgetsSection(Section):
    """Power and interference budgets, in W unless the name says dBW."""

    total_power: float = Field(0.1, gt=0)
    interference_threshold: float = Field(1e-3, gt=0)
    window_thresholds: list[float] = Field(default_factory=lambda: [1.0, 1e-3])
    sweep_start_dbw: float = -40.0
    sweep_stop_dbw: float = 10.0
    sweep_step_db: float = Field(1.0, gt=0)
    noise: float = Field(1e-6, gt=0)
    omega_override: list[float] | None = None

    def threshold_sweep(self) -> np.ndarray:
        """I_th sweep in W."""
        span = (self.sweep_stop_dbw - self.sweep_start_dbw) / self.sweep_step_db
        steps = int(np.floor(span + 1e-9))
        dbw = np.round(self.sweep_start_dbw + self.sweep_step_db * np.arange(steps + 1), 9)
        return 10.0 ** (dbw / 10.0)


class OffsetsSection(Section):
    """Misalignment ranges and table grid steps."""

    dt_max: int | None = Field(None, ge=0)  # None: half an incumbent symbol
    df_max: float = Field(1.0, ge=0)
    dt_step: int = Field(1, ge=1)
    df_step: float = Field(0.1, gt=0)
    distance_span: int | None = Field(None, ge=0)  # None: M // 2


class OutputSection(Section):
    table_dir: Path = Path("tables")
    out_dir: Path = Path("out")


class ScenarioConfig(Section):
    """Complete scenario: numerology, waveform, band, budgets and grids."""

    incumbent: IncumbentSection = IncumbentSection()
    waveform: WaveformSection = WaveformSection()
    band: BandSection = BandSection()
    window: WindowSection = WindowSection()
    budgets: BudgetsSection = BudgetsSection()
    offsets: OffsetsSection = OffsetsSection()
    output: OutputSection = OutputSection()
    seed: int = 0
    trials: int | None = Field(None, ge=1)  # None: analytic tables

    @model_validator(mode="after")
    def check_consistency(self) -> "ScenarioConfig":
        limit = (self.incumbent.M + self.incumbent.cp_samples) // 2
        if self.offsets.dt_max is not None and self.offsets.dt_max > limit:
            raise ValueError(f"offsets.dt_max={self.offsets.dt_max} exceeds half a symbol ({limit})")
        bands = self.band.band_map()
        highest = max(bands.free + bands.incumbent)
        if highest >= self.incumbent.M:
            raise ValueError(
                f"Subcarrier {highest} does not exist with M={self.incumbent.M}"
            )
        if self.budgets.omega_override is not None and len(self.budgets.omega_override) != len(
            bands.free
        ):
            raise ValueError(
                f"omega_override has {len(self.budgets.omega_override)} entries, "
                f"free band has {len(bands.free)}"
            )
        return self

    def incumbent_config(self) -> IncumbentConfig:
        return IncumbentConfig(
            M=self.incumbent.M,
            cp_samples=self.incumbent.cp_samples,
            observation_symbols=self.incumbent.observation_symbols,
            subcarrier_spacing=self.incumbent.subcarrier_spacing,
        )

    def waveform_config(self, kind: WaveformKind | str | None = None) -> WaveformConfig:
        """Waveform preset with this scenario's overrides, for ``kind`` or the configured one."""
        section = self.waveform
        return WaveformConfig.preset(
            kind if kind is not None else section.kind,
            M=self.incumbent.M,
            cp_samples=self.incumbent.cp_samples,
            overlap_factor=section.overlap_factor,
            rolloff=section.rolloff,
            block_symbols=section.block_symbols,
            lapped_verbatim=section.lapped_verbatim,
            subcarrier_spacing=self.incumbent.subcarrier_spacing,
        )

    def band_map(self) -> BandMap:
        return self.band.band_map()

    def dt_grid(self) -> np.ndarray:
        limit = self.offsets.dt_max
        if limit is None:
            limit = (self.incumbent.M + self.incumbent.cp_samples) // 2
        positive = np.arange(0, limit + 1, self.offsets.dt_step)
        return np.unique(np.concatenate([-positive, positive]))

    def df_grid(self) -> np.ndarray:
        steps = int(np.floor(self.offsets.df_max / self.offsets.df_step + 1e-9))
        positive = np.round(np.arange(steps + 1) * self.offsets.df_step, 9)
        return np.unique(np.concatenate([-positive, positive]))

    def distances(self) -> np.ndarray:
        span = self.offsets.distance_span
        if span is None:
            span = self.incumbent.M // 2
        return np.arange(-span, span + 1)


def load_config(source: str | Path = DEFAULT_PRESET) -> ScenarioConfig:
    """
    Load a scenario from a JSON file or a shipped preset name.

    Raises:
        ValueError: Neither a readable file nor a known preset.
        pydantic.ValidationError: The scenario is invalid.
    """
    path = Path(source)
    if path.is_file():
        logger.info(f"Loading scenario from {path}")
        return ScenarioConfig.model_validate_json(path.read_text())

    preset = resources.files("d2d_overlay").joinpath("presets", f"{source}.json")
    if preset.is_file():
        logger.info(f"Loading shipped preset '{source}'")
        return ScenarioConfig.model_validate_json(preset.read_text())

    raise ValueError(f"Scenario '{source}' is neither a file nor a shipped preset")

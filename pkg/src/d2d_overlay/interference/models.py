"""Pydantic models of the persisted interference table file."""

from typing import Literal

from pydantic import BaseModel, model_validator

TABLE_FORMAT_VERSION = 1


class IncumbentRecord(BaseModel):
    """Incumbent numerology the table was computed against."""

    M: int
    N_CP: int
    N: int
    subcarrier_spacing: float


class TableFile(BaseModel):
    """On-disk interference table; values are flattened in (distance, dt, df) order."""

    format_version: int = TABLE_FORMAT_VERSION
    waveform: str
    waveform_params: dict[str, int | float | str | bool | None]
    incumbent: IncumbentRecord
    distances: list[int]
    dt_grid: list[int]
    df_grid: list[float]
    values: list[float]
    seed: int
    trials_or_analytic: int | Literal["analytic"]

    @model_validator(mode="after")
    def check_shape(self) -> "TableFile":
        if self.format_version != TABLE_FORMAT_VERSION:
            raise ValueError(f"Unsupported table format version {self.format_version}")
        expected = len(self.distances) * len(self.dt_grid) * len(self.df_grid)
        if len(self.values) != expected:
            raise ValueError(f"Table holds {len(self.values)} values, expected {expected}")
        return self

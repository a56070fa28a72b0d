"""Pydantic models of the runner's report files."""

from pydantic import BaseModel


class AllocationReport(BaseModel):
    """Outcome of one power allocation over the free band."""

    waveform: str
    free_subcarriers: list[int]
    omegas: list[float]
    powers: list[float]
    alpha: float
    beta: float
    binding: str
    total_power: float
    power_utilization: float  # sum P_m / P_t
    interference: float  # sum P_m Omega_m, W
    interference_utilization: float  # interference / I_th
    free_symbols: int
    useful_symbols: int
    total_bits: float
    seed: int

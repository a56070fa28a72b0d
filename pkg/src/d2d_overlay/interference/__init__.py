"""Interference injected into the incumbent by misaligned D2D subcarriers."""

from d2d_overlay.interference.cache import TableCache, table_key, write_atomic
from d2d_overlay.interference.engine import (
    IncumbentConfig,
    InterferenceStream,
    Offset,
    analytic_mean_interference,
    build_table,
    instantaneous_interference,
    interference_stream,
    mean_interference,
)
from d2d_overlay.interference.tables import (
    BandMap,
    InterferenceTable,
    shift_lookup,
    total_interference,
)

__all__ = [
    "BandMap",
    "IncumbentConfig",
    "InterferenceStream",
    "InterferenceTable",
    "Offset",
    "TableCache",
    "analytic_mean_interference",
    "build_table",
    "instantaneous_interference",
    "interference_stream",
    "mean_interference",
    "shift_lookup",
    "table_key",
    "total_interference",
    "write_atomic",
]

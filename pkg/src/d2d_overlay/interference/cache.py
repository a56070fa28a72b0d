"""On-disk cache of interference tables."""

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from d2d_overlay.interference.engine import IncumbentConfig
from d2d_overlay.interference.models import IncumbentRecord, TableFile
from d2d_overlay.interference.tables import InterferenceTable
from d2d_overlay.waveforms import WaveformConfig

logger = logging.getLogger(__name__)


def table_key(
    config: WaveformConfig,
    incumbent: IncumbentConfig,
    distances,
    dt_grid,
    df_grid,
    *,
    seed: int = 0,
    trials: int | None = None,
) -> str:
    """Cache key of a table: waveform name plus a digest of every input that shapes it."""
    inputs = {
        "waveform": config.describe(),
        "incumbent": [
            incumbent.M,
            incumbent.cp_samples,
            incumbent.observation_symbols,
            incumbent.subcarrier_spacing,
        ],
        "distances": [int(d) for d in distances],
        "dt_grid": [int(t) for t in dt_grid],
        "df_grid": [round(float(f), 9) for f in df_grid],
        "seed": seed,
        "trials": trials,
    }
    digest = hashlib.sha256(json.dumps(inputs, sort_keys=True).encode()).hexdigest()
    return f"{config.kind.value}-{digest[:12]}"


def to_record(table: InterferenceTable) -> TableFile:
    """Serializable form of a table."""
    incumbent = table.incumbent
    return TableFile(
        waveform=table.waveform.value,
        waveform_params=table.waveform_params,
        incumbent=IncumbentRecord(
            M=incumbent.M,
            N_CP=incumbent.cp_samples,
            N=incumbent.observation_symbols,
            subcarrier_spacing=incumbent.subcarrier_spacing,
        ),
        distances=table.distances.tolist(),
        dt_grid=table.dt_grid.tolist(),
        df_grid=table.df_grid.tolist(),
        values=table.values.ravel().tolist(),
        seed=table.seed,
        trials_or_analytic="analytic" if table.trials is None else table.trials,
    )


def from_record(record: TableFile) -> InterferenceTable:
    """Rebuild a table from its serialized form."""
    shape = (len(record.distances), len(record.dt_grid), len(record.df_grid))
    trials = record.trials_or_analytic
    return InterferenceTable(
        waveform=record.waveform,
        distances=np.array(record.distances),
        dt_grid=np.array(record.dt_grid),
        df_grid=np.array(record.df_grid),
        values=np.array(record.values).reshape(shape),
        incumbent=IncumbentConfig(
            M=record.incumbent.M,
            cp_samples=record.incumbent.N_CP,
            observation_symbols=record.incumbent.N,
            subcarrier_spacing=record.incumbent.subcarrier_spacing,
        ),
        waveform_params=dict(record.waveform_params),
        seed=record.seed,
        trials=None if trials == "analytic" else trials,
    )


def write_atomic(path: Path, text: str) -> Path:
    """Write text through a temporary file in the target directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(dir=path.parent, prefix=f".{path.stem}_", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(temp_path, path)
    except Exception:
        # Clean up temp file on failure
        if os.path.exists(temp_path):
            os.unlink(temp_path)
        raise
    return path


class TableCache:
    """Stores tables as JSON files named by their cache key."""

    def __init__(self, directory: Path):
        self.directory = directory

    def path_for(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def load(self, path: Path) -> InterferenceTable | None:
        """Load a table. Returns None when the file is missing or unreadable."""
        if not path.exists():
            return None

        try:
            return from_record(TableFile.model_validate_json(path.read_text()))
        except (ValidationError, ValueError, OSError) as e:
            logger.error(f"Failed to load interference table {path}: {e}")
            return None

    def save(self, table: InterferenceTable, path: Path) -> Path:
        """Save a table atomically."""
        write_atomic(path, to_record(table).model_dump_json(indent=2))
        logger.info(f"Saved {table.waveform.value} interference table to {path}")
        return path

    def get_or_build(self, key: str, build, *, force_rebuild: bool = False) -> InterferenceTable:
        """Return the cached table for ``key``, building and saving it when absent."""
        path = self.path_for(key)
        if not force_rebuild:
            table = self.load(path)
            if table is not None:
                logger.info(f"Loaded interference table from {path}")
                return table

        table = build()
        self.save(table, path)
        return table

"""Pytest fixtures for D2D overlay tests."""

import tempfile
from pathlib import Path

import pytest

from d2d_overlay.config import ScenarioConfig
from d2d_overlay.interference import IncumbentConfig, build_table
from d2d_overlay.waveforms import WaveformKind

# Coarse grids keep session tables fast while still spanning every offset range
COARSE_OFFSETS = {"dt_step": 4, "df_step": 0.25}


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def incumbent():
    """Default LTE-like incumbent: 180 subcarriers, 12-sample CP, 20 symbols."""
    return IncumbentConfig()


def coarse_scenario(root: Path, **updates) -> ScenarioConfig:
    """Default scenario with coarse offset grids and outputs under ``root``."""
    data = {
        "offsets": COARSE_OFFSETS,
        "window": {"free_symbols": 14, "sweep": [1, 5, 10, 20, 50, 100]},
        "output": {"table_dir": str(root / "tables"), "out_dir": str(root / "out")},
    }
    data.update(updates)
    return ScenarioConfig.model_validate(data)


@pytest.fixture(scope="session")
def coarse_config(tmp_path_factory):
    """Scenario shared by the session-scoped tables."""
    return coarse_scenario(tmp_path_factory.mktemp("scenario"))


@pytest.fixture(scope="session")
def coarse_tables(coarse_config):
    """Analytic tables of all five waveforms on the coarse grids, built once."""
    incumbent = coarse_config.incumbent_config()
    return {
        kind: build_table(
            coarse_config.waveform_config(kind),
            incumbent,
            coarse_config.distances(),
            coarse_config.dt_grid(),
            coarse_config.df_grid(),
        )
        for kind in WaveformKind
    }


@pytest.fixture(scope="session")
def timing_tables():
    """Tables over every timing offset at delta_f = 0 for |d| <= 5."""
    incumbent = IncumbentConfig()
    config = ScenarioConfig()
    return {
        kind: build_table(
            config.waveform_config(kind),
            incumbent,
            range(-5, 6),
            config.dt_grid(),
            [0.0],
        )
        for kind in WaveformKind
    }

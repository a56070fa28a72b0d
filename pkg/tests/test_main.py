"""Tests for the command-line runner."""

import json

import numpy as np
import pandas as pd
import pytest

from d2d_overlay.interference import TableCache
from d2d_overlay.main import build_parser, main


@pytest.fixture
def scenario_file(temp_dir):
    """Write a coarse-grid scenario whose outputs land in the temp directory."""

    def _write(**updates):
        data = {
            "offsets": {"dt_step": 4, "df_step": 0.25},
            "window": {"free_symbols": 14, "sweep": [1, 14, 100]},
            "output": {
                "table_dir": str(temp_dir / "tables"),
                "out_dir": str(temp_dir / "out"),
            },
        }
        data.update(updates)
        path = temp_dir / "scenario.json"
        path.write_text(json.dumps(data))
        return path

    return _write


def only_table(temp_dir):
    tables = sorted((temp_dir / "tables").glob("*.json"))
    assert len(tables) == 1
    return tables[0]


class TestTableCommand:
    """Test the table command."""

    def test_ofdm_cp_region_is_clean(self, temp_dir, scenario_file, capsys):
        """In-CP, zero-delta_f, off-diagonal OFDM entries should be below 1e-10."""
        assert main(["--config", str(scenario_file()), "table", "--waveform", "ofdm"]) == 0
        assert "Interference table:" in capsys.readouterr().out

        table = TableCache(temp_dir / "tables").load(only_table(temp_dir))
        in_cp = [table.dt_index(t) for t in (0, 4, 8, 12)]
        off_diagonal = table.distances != 0
        values = table.values[off_diagonal][:, in_cp, table.df_index(0.0)]

        assert values.max() < 1e-10

    def test_rerun_is_byte_identical(self, temp_dir, scenario_file):
        """Cached and forced rebuilds should leave identical files."""
        config = str(scenario_file())

        assert main(["--config", config, "table", "--waveform", "fmt"]) == 0
        first = only_table(temp_dir).read_bytes()
        assert main(["--config", config, "table", "--waveform", "fmt"]) == 0
        second = only_table(temp_dir).read_bytes()
        assert main(["--config", config, "--force-rebuild", "table", "--waveform", "fmt"]) == 0
        third = only_table(temp_dir).read_bytes()

        assert first == second == third

    def test_gfdm_metadata(self, temp_dir, scenario_file):
        """GFDM tables should record N_b = 5 and rolloff 0.2."""
        assert main(["--config", str(scenario_file()), "table", "--waveform", "gfdm"]) == 0

        data = json.loads(only_table(temp_dir).read_text())

        assert data["waveform"] == "gfdm"
        assert data["waveform_params"]["block_symbols"] == 5
        assert data["waveform_params"]["rolloff"] == 0.2
        assert data["trials_or_analytic"] == "analytic"

    def test_out_sets_table_directory(self, temp_dir, scenario_file):
        """--out should redirect the table directory."""
        target = temp_dir / "elsewhere"

        code = main(
            ["--config", str(scenario_file()), "table", "--waveform", "lapped", "--out", str(target)]
        )

        assert code == 0
        assert len(list(target.glob("lapped-*.json"))) == 1


class TestAllocateCommand:
    """Test the allocate command."""

    def test_zero_omega_gives_uniform_powers(self, temp_dir, scenario_file):
        """With Omega forced to zero the report should show equal powers."""
        path = scenario_file(budgets={"omega_override": [0.0] * 12})
        out = temp_dir / "report.json"

        assert main(["--config", str(path), "allocate", "--out", str(out)]) == 0

        report = json.loads(out.read_text())
        np.testing.assert_allclose(report["powers"], np.full(12, 0.1 / 12), rtol=1e-9)
        assert report["binding"] == "power"
        assert not (temp_dir / "tables").exists()

    def test_default_oqam_respects_threshold(self, temp_dir, scenario_file):
        """The default OQAM scenario should stay within I_th."""
        out = temp_dir / "report.json"

        assert main(["--config", str(scenario_file()), "allocate", "--out", str(out)]) == 0

        report = json.loads(out.read_text())
        assert report["waveform"] == "oqam"
        assert report["interference_utilization"] <= 1 + 1e-9
        assert report["power_utilization"] <= 1 + 1e-9
        assert report["useful_symbols"] == 11
        assert len(report["omegas"]) == 12

    def test_same_seed_same_report(self, temp_dir, scenario_file):
        """Re-running with the same seed should give an identical report."""
        config = str(scenario_file())
        first, second = temp_dir / "a.json", temp_dir / "b.json"

        assert main(["--config", config, "--seed", "4", "allocate", "--out", str(first)]) == 0
        assert main(["--config", config, "--seed", "4", "allocate", "--out", str(second)]) == 0

        assert first.read_bytes() == second.read_bytes()
        assert json.loads(first.read_text())["seed"] == 4

    def test_scenario_options_after_command(self, temp_dir, scenario_file):
        """--config, --seed and --force-rebuild should also work after the command."""
        out = temp_dir / "report.json"

        code = main(
            [
                "allocate",
                "--config",
                str(scenario_file()),
                "--seed",
                "3",
                "--force-rebuild",
                "--out",
                str(out),
            ]
        )

        assert code == 0
        assert json.loads(out.read_text())["seed"] == 3

    def test_options_before_command_survive(self):
        """Options given before the command should not be reset by the command's defaults."""
        args = build_parser().parse_args(
            ["--config", "custom.json", "--seed", "7", "--force-rebuild", "allocate"]
        )

        assert args.config == "custom.json"
        assert args.seed == 7
        assert args.force_rebuild is True


class TestFigureCommand:
    """Test the figure command."""

    def test_writes_csv(self, temp_dir, scenario_file):
        """fig5a should be written as CSV with a header row."""
        out = temp_dir / "fig5a.csv"

        args = ["--config", str(scenario_file()), "figure", "--figure", "fig5a", "--out", str(out)]

        assert main(args) == 0

        frame = pd.read_csv(out)
        assert list(frame.columns) == ["waveform", "distance", "mean_db"]
        assert set(frame["waveform"]) == {"ofdm", "fmt", "oqam", "lapped", "gfdm"}

    def test_unknown_figure_is_a_usage_error(self, scenario_file):
        """argparse should reject unknown figure ids with status 2."""
        with pytest.raises(SystemExit) as exc_info:
            main(["--config", str(scenario_file()), "figure", "--figure", "fig9"])

        assert exc_info.value.code == 2


class TestErrors:
    """Test error reporting."""

    def test_invalid_scenario(self, temp_dir, capsys):
        """Invalid scenarios should exit 1 with a diagnostic."""
        path = temp_dir / "bad.json"
        path.write_text(json.dumps({"band": {"free_indices": [5], "incumbent_indices": [5]}}))

        assert main(["--config", str(path), "table"]) == 1
        assert "Error:" in capsys.readouterr().err

    def test_unknown_preset(self, capsys):
        """Unknown presets should exit 1."""
        assert main(["--config", "no-such-preset", "table"]) == 1
        assert "neither a file nor a shipped preset" in capsys.readouterr().err

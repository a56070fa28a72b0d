"""Tests for figure data builders."""

import numpy as np
import pytest

from d2d_overlay.figures import FigureId, build_figure, to_db
from d2d_overlay.waveforms import WaveformKind


def bits_by_waveform(frame, column):
    return {
        waveform: group.set_index(column)["bits"] for waveform, group in frame.groupby("waveform")
    }


class TestInterferenceFigures:
    """Test the interference figures."""

    def test_fig3_ofdm_cp_region(self, coarse_tables, coarse_config):
        """OFDM total interference should collapse inside the CP only."""
        frame = build_figure("fig3", coarse_tables, coarse_config)
        ofdm = frame[frame["waveform"] == "ofdm"].set_index("delta_t_samples")

        assert list(frame.columns) == ["waveform", "delta_t_samples", "interference_db"]
        assert ofdm.loc[[0, 4, 8, 12], "interference_db"].max() < -100
        assert ofdm.loc[[-40, 40], "interference_db"].min() > -80

    def test_fig4_heat_data(self, coarse_tables, coarse_config):
        """fig4 should hold twenty distances for every timing offset and waveform."""
        frame = build_figure(FigureId.FIG4, coarse_tables, coarse_config)

        n_dt = coarse_config.dt_grid().size
        assert len(frame) == 5 * 20 * n_dt
        assert 0 not in set(frame["distance"])
        assert set(frame["distance"]) == set(range(-10, 0)) | set(range(1, 11))

    def test_fig5_profiles(self, coarse_tables, coarse_config):
        """fig5a/fig5b should give mean and max per distance, max above mean."""
        mean = build_figure("fig5a", coarse_tables, coarse_config)
        worst = build_figure("fig5b", coarse_tables, coarse_config)

        assert len(mean) == 5 * 41
        assert np.all(worst["max_db"].to_numpy() >= mean["mean_db"].to_numpy() - 1e-9)

    def test_fig5_oqam_distance_two(self, coarse_tables, coarse_config):
        """OQAM worst case at distance 2 should sit near -18.5 dB."""
        worst = build_figure("fig5b", coarse_tables, coarse_config)
        oqam = worst[worst["waveform"] == "oqam"].set_index("distance")

        assert oqam.loc[2, "max_db"] == pytest.approx(-18.5, abs=1.0)

    def test_to_db_floor(self):
        """Zero power should be clamped to the -300 dB floor."""
        assert to_db([0.0, 1.0]).tolist() == [-300.0, 0.0]


class TestThroughputFigures:
    """Test the bits figures."""

    def test_fig6a_ofdm_leads_short_windows(self, coarse_tables, coarse_config):
        """With a loose threshold OFDM should be on top for short windows."""
        frame = build_figure("fig6a", coarse_tables, coarse_config)
        bits = bits_by_waveform(frame, "free_symbols")

        for n_f in (1, 5):
            best_other = max(bits[w.value][n_f] for w in WaveformKind if w is not WaveformKind.OFDM)
            assert bits["ofdm"][n_f] >= best_other * (1 - 1e-12)
        assert bits["ofdm"][1] > 0

    def test_fig6b_filtered_waveforms_win_long_windows(self, coarse_tables, coarse_config):
        """With a strict threshold and long windows OQAM and Lapped should beat OFDM and GFDM."""
        frame = build_figure("fig6b", coarse_tables, coarse_config)
        bits = bits_by_waveform(frame, "free_symbols")

        for winner in ("oqam", "lapped"):
            for loser in ("ofdm", "gfdm"):
                assert bits[winner][100] > bits[loser][100]

    def test_fig6b_short_windows(self, coarse_tables, coarse_config):
        """With a strict threshold OFDM should lead the delayed waveforms for short windows."""
        frame = build_figure("fig6b", coarse_tables, coarse_config)
        bits = bits_by_waveform(frame, "free_symbols")

        assert bits["ofdm"][1] > 0
        for other in ("fmt", "oqam", "lapped", "gfdm"):
            assert bits[other][1] == 0
        for other in ("fmt", "oqam", "lapped"):
            assert bits["ofdm"][5] > bits[other][5]
        # Five symbols each, and GFDM's worst-case leakage is below OFDM's
        assert bits["gfdm"][5] >= bits["ofdm"][5]

    def test_fig7_monotone_and_saturating(self, coarse_tables, coarse_config):
        """Bits should never fall as I_th grows and should level off."""
        frame = build_figure("fig7", coarse_tables, coarse_config)
        bits = bits_by_waveform(frame, "interference_threshold_dbw")

        for curve in bits.values():
            values = curve.to_numpy()
            assert np.all(np.diff(values) >= -1e-9 * values.max())
            assert values[-1] == pytest.approx(values[-2], rel=1e-9)

    def test_fig7_ofdm_first_when_threshold_is_loose(self, coarse_tables, coarse_config):
        """OFDM should rank first for I_th >= -10 dBW."""
        frame = build_figure("fig7", coarse_tables, coarse_config)
        loose = frame[frame["interference_threshold_dbw"] >= -10]

        for _, group in loose.groupby("interference_threshold_dbw"):
            ranked = group.set_index("waveform")["bits"]
            assert ranked["ofdm"] >= ranked.max() * (1 - 1e-12)


class TestBuildFigure:
    """Test figure dispatch."""

    def test_unknown_figure(self, coarse_tables, coarse_config):
        """Unknown figure ids should be rejected."""
        with pytest.raises(ValueError):
            build_figure("fig9", coarse_tables, coarse_config)

    def test_requires_tables(self, coarse_config):
        """At least one table is needed."""
        with pytest.raises(ValueError, match="No interference tables"):
            build_figure("fig3", {}, coarse_config)

    def test_omega_override(self, coarse_tables, coarse_config):
        """An Omega override should bypass the tables for the bits figures."""
        budgets = coarse_config.budgets.model_copy(update={"omega_override": [0.0] * 12})
        config = coarse_config.model_copy(update={"budgets": budgets})

        frame = build_figure("fig7", coarse_tables, config)
        ofdm = frame[frame["waveform"] == "ofdm"]["bits"].to_numpy()

        np.testing.assert_allclose(ofdm, ofdm[0])

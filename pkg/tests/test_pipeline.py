"""End-to-end pipeline checks on small, fast configurations."""

import math

import numpy as np
import pytest

from spdcsim.config import (AcquisitionConfig, ChannelConfig, DetectionConfig,
                            DispersionConfig, ExperimentConfig, HistogramConfig,
                            SpectrumConfig)
from spdcsim.pipeline import (_accidental_floor_per_nm, analyze_tags,
                              build_chain, effective_channels, run_power_sweep,
                              run_simulation, split_rates, tof_spectrum)
from spdcsim.spectral import PumpConfig, ResonanceChannel
from spdcsim.tof import peak_wavelength


def _small_config(pl_rate=0.0, duration=120.0):
    # two channels with orthogonal polarizations so their rates just add: a
    # narrow line inside the peak window and a broad underlay.  Emission
    # rates are 4 and 12 pairs/s/mW; opposite-detector routing halves what
    # the coincidence counter sees, so about 2 and 5.7 Hz arrive (the broad
    # arm loses a few percent of idlers past the 1650 nm band edge).
    narrow = ResonanceChannel("narrow", 1581.6, 5.0, 30.0,
                              polarization=(1.0 + 0.0j, 0.0 + 0.0j))
    broad = ResonanceChannel("broad", 1560.0, 60.0, 300.0,
                             polarization=(0.0 + 0.0j, 1.0 + 0.0j))
    return ExperimentConfig(
        pump=PumpConfig(790.8, 1.0),
        channels=(ChannelConfig(narrow, 4.0), ChannelConfig(broad, 12.0)),
        detection=DetectionConfig(jitter_combined_ps=162.0),
        dispersion=DispersionConfig(True, 34.0, 1581.6, 2.0),
        acquisition=AcquisitionConfig(duration_s=duration, master_seed=777),
        histogram=HistogramConfig(900, 9450, 1),
        spectrum=SpectrumConfig(1450.0, 1650.0, 0.5, 1571.6, 1591.6),
        pl_rate_per_mw_per_detector_hz=pl_rate)


class TestEffectiveChannels:
    def test_no_coupling_passthrough(self):
        cfg = _small_config()
        channels, rates = effective_channels(cfg)
        assert channels == [cc.channel for cc in cfg.channels]
        assert rates == [4.0, 12.0]

    def test_coupling_projection(self):
        cfg = _small_config()
        import dataclasses
        angle = math.radians(30.0)
        pump = PumpConfig(790.8, 1.0, polarization_angle_rad=angle)
        chans = tuple(dataclasses.replace(cc, coupling_angle_rad=0.0)
                      for cc in cfg.channels)
        cfg = dataclasses.replace(cfg, pump=pump, channels=chans)
        channels, rates = effective_channels(cfg)
        c2 = math.cos(angle) ** 2
        assert channels[0].amplitude == pytest.approx(30.0 * c2)
        assert rates[0] == pytest.approx(4.0 * c2 * c2)
        assert rates[1] == pytest.approx(12.0 * c2 * c2)


class TestBuildChain:
    def test_dispersion_override(self):
        cfg = _small_config()
        assert build_chain(cfg).dispersion_slope_ps_per_nm == 34.0
        assert build_chain(cfg, dispersion=False).dispersion_slope_ps_per_nm == 0.0
        assert build_chain(cfg, dispersion=True).dispersion_slope_ps_per_nm == 34.0

    def test_passband_carried(self):
        chain = build_chain(_small_config())
        assert chain.filter_passband_nm == (1450.0, 1650.0)


class TestRunSimulation:
    def test_deterministic(self):
        cfg = _small_config(duration=30.0)
        a = run_simulation(cfg)
        b = run_simulation(cfg)
        assert np.array_equal(a.tags_a, b.tags_a)
        assert np.array_equal(a.tags_b, b.tags_b)

    def test_seed_changes_stream(self):
        cfg = _small_config(duration=30.0)
        a = run_simulation(cfg)
        b = run_simulation(cfg, seed=778)
        assert not (np.array_equal(a.tags_a, b.tags_a)
                    and np.array_equal(a.tags_b, b.tags_b))

    def test_power_override_scales_counts(self):
        cfg = _small_config(duration=60.0)
        lo = run_simulation(cfg, power_mw=1.0)
        hi = run_simulation(cfg, power_mw=8.0, seed=991)
        assert len(hi) > 4 * len(lo)


class TestAnalyzeTags:
    def test_pure_pairs_give_infinite_g2(self):
        cfg = _small_config(duration=60.0)
        tags = run_simulation(cfg, dispersion=False)
        res = analyze_tags(tags.tags_a, tags.tags_b, cfg)
        assert math.isinf(res.g2)
        assert res.rate.value_hz == pytest.approx(7.7, abs=1.2)

    def test_background_makes_g2_finite(self):
        cfg = _small_config(pl_rate=2000.0, duration=60.0)
        tags = run_simulation(cfg, dispersion=False)
        res = analyze_tags(tags.tags_a, tags.tags_b, cfg)
        assert math.isfinite(res.g2)
        assert res.g2 > 1.0


class TestTofSpectrum:
    def test_requires_dispersion(self):
        cfg = _small_config()
        import dataclasses
        cfg = dataclasses.replace(
            cfg, dispersion=DispersionConfig(False, 34.0, 1581.6, 2.0))
        tags = run_simulation(cfg, duration_s=10.0)
        with pytest.raises(ValueError, match="dispersion required"):
            tof_spectrum(tags.tags_a, tags.tags_b, cfg)

    def test_narrow_line_peaks_at_resonance(self):
        cfg = _small_config(duration=120.0)
        tags = run_simulation(cfg)
        spec = tof_spectrum(tags.tags_a, tags.tags_b, cfg)
        assert spec.counts.sum() > 0
        assert peak_wavelength(spec) == pytest.approx(1581.6, abs=1.5)
        assert spec.resolution_nm > 0


class TestSplitRates:
    def test_one_to_three_channels(self):
        # narrow channel detected near 2 Hz against broad near 5.7 Hz; the
        # window catches the narrow line (99% of it) while the pedestal
        # subtraction removes the broad underlay beneath it
        cfg = _small_config(duration=240.0)
        flat = run_simulation(cfg, dispersion=False)
        res = analyze_tags(flat.tags_a, flat.tags_b, cfg)
        disp = run_simulation(cfg, dispersion=True)
        spec = tof_spectrum(disp.tags_a, disp.tags_b, cfg)
        rin, rout = split_rates(res.histogram, spec, cfg)
        assert rin.value_hz + rout.value_hz == pytest.approx(
            res.rate.value_hz, rel=1e-12)
        assert rin.value_hz == pytest.approx(2.0, abs=0.45)
        assert rin.sigma_hz < 0.25
        # broad channel loses some idlers past the band edge, so below 6 Hz
        assert rout.value_hz == pytest.approx(5.7, abs=0.8)


class TestAccidentalFloor:
    def test_zero_outside_delay_reach(self):
        grid = np.arange(1450.0, 1650.5, 0.5)
        floor = _accidental_floor_per_nm(grid, 1.0, 34.0, 790.8, 9450.0)
        lam = grid
        conj = 1.0 / (1.0 / 790.8 - 1.0 / lam)
        out_of_reach = 34.0 * np.abs(lam - conj) > 9450.0
        assert np.all(floor[out_of_reach] == 0.0)
        assert np.any(out_of_reach)

    def test_flat_value_at_degeneracy(self):
        grid = np.array([1581.6])
        floor = _accidental_floor_per_nm(grid, 2.0, 34.0, 790.8, 9450.0)
        assert floor[0] == pytest.approx(4.0 * 34.0 * 2.0, rel=1e-6)

    def test_total_matches_delay_budget(self):
        # integrating the floor over the reachable grid must reproduce
        # 2 * rho * (delay span covered by in-grid wavelengths)
        grid = np.arange(1450.0, 1650.05, 0.1)
        rho, slope, lp, window = 1.3, 34.0, 790.8, 9450.0
        floor = _accidental_floor_per_nm(grid, rho, slope, lp, window)
        conj = 1.0 / (1.0 / lp - 1.0 / grid)
        delta = slope * (grid - conj)
        lo = max(float(delta[0]), -window)
        hi = min(float(delta[-1]), window)
        want = 2.0 * rho * (hi - lo)
        got = float(np.trapezoid(floor, grid))
        assert got == pytest.approx(want, rel=0.01)


class TestPowerSweep:
    def test_linear_scaling(self):
        cfg = _small_config(duration=30.0)
        points, fit = run_power_sweep(cfg, (2.0, 6.0, 10.0), 30.0)
        assert len(points) == 3
        assert [p for p, _ in points] == [2.0, 6.0, 10.0]
        # true slope is just below 8 Hz/mW (band edge losses on the broad arm)
        assert fit.slope == pytest.approx(7.7, abs=0.8)
        assert abs(fit.intercept) < 5.0 * max(fit.intercept_sigma, 1e-9)
        assert fit.r_squared > 0.98

    def test_deterministic(self):
        cfg = _small_config(duration=10.0)
        _, fit1 = run_power_sweep(cfg, (2.0, 6.0, 10.0), 10.0)
        _, fit2 = run_power_sweep(cfg, (2.0, 6.0, 10.0), 10.0)
        assert fit1 == fit2

    def test_too_few_powers(self):
        cfg = _small_config(duration=10.0)
        with pytest.raises(ValueError, match="at least 3 points"):
            run_power_sweep(cfg, (2.0, 6.0), 10.0)

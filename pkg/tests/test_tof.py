import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdcsim.tof import (
    FWHM_OVER_SIGMA,
    DispersionCalibration,
    SpectrumEstimate,
    accumulate_spectrum,
    delta_t_to_pair,
    estimate_resolution,
    fwhm,
    peak_wavelength,
)

CAL = DispersionCalibration(slope_ps_per_nm=34.0, ref_lambda_nm=1581.6, fiber_length_km=2.0)
PUMP = 790.8


class TestDeltaTToPair:
    def test_zero_delay_is_degenerate(self):
        lam_s, lam_i = delta_t_to_pair(0.0, CAL, PUMP)
        assert lam_s == pytest.approx(1581.6, rel=1e-12)
        assert lam_i == pytest.approx(1581.6, rel=1e-12)

    def test_frozen_value_680ps(self):
        lam_s, lam_i = delta_t_to_pair(680.0, CAL, PUMP)
        assert lam_s - lam_i == pytest.approx(20.0, rel=1e-12)
        assert lam_s == pytest.approx(1591.663224584378, rel=1e-12)
        assert lam_i == pytest.approx(1571.663224584378, rel=1e-12)

    def test_sign_flip_swaps_pair(self):
        a = delta_t_to_pair(680.0, CAL, PUMP)
        b = delta_t_to_pair(-680.0, CAL, PUMP)
        assert a[0] == pytest.approx(b[1], rel=1e-12)
        assert a[1] == pytest.approx(b[0], rel=1e-12)

    def test_out_of_passband_raises(self):
        with pytest.raises(ValueError, match="out of dispersive range"):
            delta_t_to_pair(9000.0, CAL, PUMP, passband_nm=(1450.0, 1650.0))

    def test_inside_passband_ok(self):
        lam_s, lam_i = delta_t_to_pair(680.0, CAL, PUMP, passband_nm=(1450.0, 1650.0))
        assert 1450.0 <= lam_i <= lam_s <= 1650.0

    @given(st.floats(-9000, 9000), st.floats(5.0, 80.0), st.floats(400.0, 1000.0))
    @settings(max_examples=100)
    def test_round_trip(self, dt, slope, pump):
        cal = DispersionCalibration(slope, 2 * pump)
        lam_s, lam_i = delta_t_to_pair(dt, cal, pump)
        assert slope * (lam_s - lam_i) == pytest.approx(dt, rel=1e-9, abs=1e-6)

    @given(st.floats(-9000, 9000))
    @settings(max_examples=100)
    def test_energy_conservation(self, dt):
        lam_s, lam_i = delta_t_to_pair(dt, CAL, PUMP)
        assert 1.0 / lam_s + 1.0 / lam_i == pytest.approx(1.0 / PUMP, rel=1e-9)


class TestAccumulateSpectrum:
    def test_degenerate_pairs_fill_single_bin(self):
        dts = np.zeros(50)
        spec = accumulate_spectrum(dts, CAL, PUMP, (1450.0, 1650.0, 1.0))
        assert spec.counts.sum() == 100  # both entries of each pair
        occupied = np.nonzero(spec.counts)[0]
        assert occupied.size == 1
        assert spec.grid_nm[occupied[0]] == pytest.approx(1581.6, abs=0.51)

    def test_total_counts_twice_coincidences(self):
        rng = np.random.default_rng(7)
        dts = rng.uniform(-3000, 3000, size=400)
        spec = accumulate_spectrum(dts, CAL, PUMP, (1400.0, 1700.0, 0.5))
        assert spec.counts.sum() == 800

    def test_out_of_grid_entries_dropped(self):
        # |dt| = 9000 ps maps ~132 nm either side of degeneracy
        spec = accumulate_spectrum([9000.0], CAL, PUMP, (1570.0, 1590.0, 0.5))
        assert spec.counts.sum() == 0

    def test_symmetric_pair_entries(self):
        spec = accumulate_spectrum([680.0, -680.0], CAL, PUMP, (1450.0, 1650.0, 1.0))
        occupied = spec.grid_nm[np.nonzero(spec.counts)[0]]
        assert occupied.size == 2
        assert spec.counts.sum() == 4

    def test_energy_conservation_of_binned_pairs(self):
        rng = np.random.default_rng(11)
        dts = rng.uniform(-4000, 4000, size=200)
        from spdcsim.tof import _pair_from_delta

        lam_s, lam_i = _pair_from_delta(dts, CAL, PUMP)
        np.testing.assert_allclose(1 / lam_s + 1 / lam_i, 1 / PUMP, rtol=1e-12)

    def test_grid_as_array(self):
        centers = np.arange(1450.0, 1650.5, 0.5)
        spec = accumulate_spectrum([0.0], CAL, PUMP, centers)
        assert spec.counts.sum() == 2
        assert spec.step_nm == pytest.approx(0.5)


class TestEstimateResolution:
    def test_fwhm_over_sigma_constant(self):
        assert FWHM_OVER_SIGMA == pytest.approx(2.3548200450309493, rel=1e-15)

    def test_fwhm_reading(self):
        assert estimate_resolution(CAL, 162.0, jitter_is_fwhm=True) == pytest.approx(
            2.3823529411764706, rel=1e-12)

    def test_sigma_reading(self):
        assert estimate_resolution(CAL, 162.0, jitter_is_fwhm=False) == pytest.approx(
            5.6100124602207915, rel=1e-12)

    def test_readings_bracket_measured_resolution(self):
        lo = estimate_resolution(CAL, 162.0, True)
        hi = estimate_resolution(CAL, 162.0, False)
        assert lo <= 4.3 <= hi

    def test_zero_jitter(self):
        assert estimate_resolution(CAL, 0.0) == 0.0

    def test_doubling_slope_halves_resolution(self):
        cal2 = DispersionCalibration(68.0, 1581.6)
        assert estimate_resolution(cal2, 162.0) == pytest.approx(
            estimate_resolution(CAL, 162.0) / 2, rel=1e-12)

    def test_zero_slope_rejected(self):
        with pytest.raises(ValueError, match="slope"):
            DispersionCalibration(0.0, 1581.6)


class TestFwhm:
    def test_lorentzian_shape_recovered(self):
        # histogram shaped as a Lorentzian curve of FWHM 10 nm
        grid = np.arange(1550.0, 1650.25, 0.25)
        gamma = 10.0
        counts = 1e4 * (gamma / 2) ** 2 / ((grid - 1600.0) ** 2 + (gamma / 2) ** 2)
        spec = SpectrumEstimate(grid, counts)
        assert fwhm(spec) == pytest.approx(10.0, abs=0.5)

    def test_single_occupied_bin_yields_bin_width(self):
        grid = np.arange(1570.0, 1590.5, 0.5)
        counts = np.zeros(grid.size)
        counts[20] = 137
        spec = SpectrumEstimate(grid, counts)
        assert fwhm(spec) == pytest.approx(0.5, rel=1e-9)

    def test_flat_spectrum_rejected(self):
        grid = np.arange(1570.0, 1590.5, 0.5)
        spec = SpectrumEstimate(grid, np.full(grid.size, 3.0))
        with pytest.raises(ValueError, match="no peak above background"):
            fwhm(spec)

    def test_background_pedestal_subtracted(self):
        grid = np.arange(1550.0, 1650.5, 0.5)
        gamma = 8.0
        counts = 500.0 + 1e4 * (gamma / 2) ** 2 / ((grid - 1600.0) ** 2 + (gamma / 2) ** 2)
        spec = SpectrumEstimate(grid, counts)
        assert fwhm(spec) == pytest.approx(8.0, abs=0.5)

    def test_peak_wavelength(self):
        grid = np.arange(1550.0, 1650.5, 0.5)
        counts = np.exp(-0.5 * ((grid - 1581.5) / 3.0) ** 2)
        spec = SpectrumEstimate(grid, counts)
        assert peak_wavelength(spec) == pytest.approx(1581.5, abs=0.26)

    def test_gaussian_width(self):
        grid = np.arange(1550.0, 1650.1, 0.1)
        sigma = 4.0
        counts = 1e4 * np.exp(-0.5 * ((grid - 1600.0) / sigma) ** 2)
        spec = SpectrumEstimate(grid, counts)
        assert fwhm(spec) == pytest.approx(FWHM_OVER_SIGMA * sigma, rel=0.02)

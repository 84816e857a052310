"""Time-of-flight fiber spectroscopy.

Coincidence arrival-time differences acquired through dispersive fiber spools
map back to signal/idler wavelength pairs via the linear dispersion relation
delta_t = slope * (lambda_signal - lambda_idler) together with energy
conservation against the pump.  Near degeneracy d(delta_t)/d(lambda_signal)
is about 2*slope, which sets the jitter-limited resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FWHM_OVER_SIGMA",
    "DispersionCalibration",
    "SpectrumEstimate",
    "delta_t_to_pair",
    "accumulate_spectrum",
    "estimate_resolution",
    "fwhm",
    "peak_wavelength",
]

# FWHM of a Gaussian in units of its standard deviation
FWHM_OVER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class DispersionCalibration:
    """Linear delay-vs-wavelength calibration of one detection arm."""

    slope_ps_per_nm: float
    ref_lambda_nm: float
    fiber_length_km: float = 0.0  # metadata only, not used in conversions

    def __post_init__(self):
        if self.slope_ps_per_nm == 0:
            raise ValueError("dispersion slope must be nonzero")
        if not self.ref_lambda_nm > 0:
            raise ValueError("ref_lambda_nm must be positive")


@dataclass
class SpectrumEstimate:
    """Accumulated coincidence spectrum on a uniform wavelength grid."""

    grid_nm: np.ndarray
    counts: np.ndarray
    resolution_nm: float = field(default=float("nan"))

    @property
    def step_nm(self) -> float:
        return float(self.grid_nm[1] - self.grid_nm[0])


def _pair_from_delta(delta_t_ps, cal: DispersionCalibration, lambda_pump_nm: float):
    """Vectorized (lambda_signal, lambda_idler) solution; no range checks."""
    d = np.asarray(delta_t_ps, dtype=float) / cal.slope_ps_per_nm
    # lambda_s - lambda_i = d and 1/lambda_s + 1/lambda_i = 1/lambda_pump
    # give lambda_s + lambda_i = 2*lp + sqrt((2*lp)^2 + d^2).
    s = 2.0 * lambda_pump_nm + np.hypot(2.0 * lambda_pump_nm, d)
    return 0.5 * (s + d), 0.5 * (s - d)


def delta_t_to_pair(delta_t_ps: float, cal: DispersionCalibration,
                    lambda_pump_nm: float, passband_nm=None):
    """Wavelength pair reconstructed from one arrival-time difference.

    Positive delta_t returns lambda_signal > lambda_idler; flipping the sign
    of delta_t swaps the pair.  With a passband given, a reconstruction
    falling outside it raises ValueError("out of dispersive range").
    """
    lam_s, lam_i = _pair_from_delta(float(delta_t_ps), cal, lambda_pump_nm)
    lam_s, lam_i = float(lam_s), float(lam_i)
    if passband_nm is not None:
        lo, hi = passband_nm
        if not (lo <= lam_s <= hi and lo <= lam_i <= hi):
            raise ValueError("out of dispersive range")
    return lam_s, lam_i


def accumulate_spectrum(delta_ts_ps, cal: DispersionCalibration, lambda_pump_nm: float,
                        grid, resolution_nm: float = float("nan")) -> SpectrumEstimate:
    """Histogram of reconstructed wavelengths over a uniform grid.

    Every coincidence contributes both of its reconstructed wavelengths, so a
    pair whose two entries land in one bin (the degenerate case) adds 2 to
    that bin and spectrum totals are twice the converted coincidence count.
    Entries outside the grid (e.g. broadband accidentals mapping beyond the
    passband) are discarded.

    Args:
        delta_ts_ps: arrival-time differences (t_B - t_A) of coincidences.
        grid: either an array of uniform bin centers or a (low, high, step)
            tuple in nm.
        resolution_nm: optional instrument resolution recorded in the result.
    """
    if isinstance(grid, tuple):
        lo, hi, step = grid
        centers = np.arange(lo, hi + 0.5 * step, step)
    else:
        centers = np.asarray(grid, dtype=float)
        if centers.size < 2:
            raise ValueError("grid needs at least two bins")
        step = float(centers[1] - centers[0])
    counts = np.zeros(centers.size, dtype=np.int64)
    dts = np.asarray(delta_ts_ps, dtype=float)
    if dts.size:
        lam_s, lam_i = _pair_from_delta(dts, cal, lambda_pump_nm)
        entries = np.concatenate([lam_s, lam_i])
        idx = np.floor((entries - (centers[0] - 0.5 * step)) / step).astype(np.int64)
        ok = (idx >= 0) & (idx < centers.size)
        counts += np.bincount(idx[ok], minlength=centers.size)
    return SpectrumEstimate(grid_nm=centers, counts=counts, resolution_nm=resolution_nm)


def estimate_resolution(cal: DispersionCalibration, jitter_combined_ps: float,
                        jitter_is_fwhm: bool = True) -> float:
    """Jitter-limited wavelength resolution (FWHM, nm) of the spectrometer.

    The pairwise timing spread maps to single-photon wavelength through
    d(delta_t)/d(lambda_signal) ~ 2*slope near degeneracy.  The combined
    jitter figure may be quoted either as a FWHM or as a standard deviation;
    the flag selects the reading.
    """
    if jitter_combined_ps < 0:
        raise ValueError("jitter must be nonnegative")
    fw = jitter_combined_ps if jitter_is_fwhm else FWHM_OVER_SIGMA * jitter_combined_ps
    return fw / (2.0 * abs(cal.slope_ps_per_nm))


def _crossing(grid, counts, half, peak_idx, direction):
    """Half-height crossing found walking outward from the peak."""
    step = grid[1] - grid[0]
    i = peak_idx
    last = 0 if direction < 0 else counts.size - 1
    while i != last:
        j = i + direction
        if counts[j] < half:
            # interpolate between j (below) and i (at or above)
            frac = (half - counts[j]) / (counts[i] - counts[j])
            return grid[j] + frac * (grid[i] - grid[j])
        i = j
    # peak plateau reaches the grid edge: clamp to the outer bin edge
    return grid[i] + direction * 0.5 * step


def fwhm(spectrum: SpectrumEstimate) -> float:
    """Linear-interpolated full width at half height of the main peak.

    The local background is the mean of the outermost bins on each side (the
    grid edges are assumed peak-free); a single occupied bin yields one bin
    width by construction of the interpolation.
    """
    counts = np.asarray(spectrum.counts, dtype=float)
    grid = np.asarray(spectrum.grid_nm, dtype=float)
    if counts.size < 3:
        raise ValueError("spectrum too short")
    k = max(1, counts.size // 20)
    background = 0.5 * (counts[:k].mean() + counts[-k:].mean())
    peak_idx = int(np.argmax(counts))
    height = counts[peak_idx] - background
    if height <= 0:
        raise ValueError("no peak above background")
    half = background + 0.5 * height
    left = _crossing(grid, counts, half, peak_idx, -1)
    right = _crossing(grid, counts, half, peak_idx, +1)
    return float(right - left)


def peak_wavelength(spectrum: SpectrumEstimate) -> float:
    """Wavelength of the highest bin."""
    return float(spectrum.grid_nm[int(np.argmax(spectrum.counts))])

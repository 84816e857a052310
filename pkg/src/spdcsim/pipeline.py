"""End-to-end orchestration from a config to tags, histograms, and spectra.

This layer owns the bookkeeping choices that tie the modules together: pump
coupling projections, the pair/background rate plumbing, per-sweep-point
seed derivation, and the accidental floor handed to the spectral rate split.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .coincidence import (CoincidenceHistogram, RateEstimate, build_histogram,
                          coincidence_deltas, g2_zero, accidental_density_per_ps,
                          power_sweep_fit, real_coincidence_rate,
                          channel_rate_split, LinearFit)
from .config import ExperimentConfig
from .montecarlo import (DetectedTags, DetectionChain, detect,
                         sample_background_events, sample_pair_events)
from .spectral import PumpConfig
from .tof import DispersionCalibration, SpectrumEstimate, accumulate_spectrum, estimate_resolution

__all__ = [
    "AnalysisResult",
    "effective_channels",
    "build_chain",
    "run_simulation",
    "analyze_tags",
    "tof_spectrum",
    "split_rates",
    "run_power_sweep",
]


@dataclass
class AnalysisResult:
    histogram: CoincidenceHistogram
    g2: float
    rate: RateEstimate


def effective_channels(cfg: ExperimentConfig):
    """Channels and per-channel rates after pump-coupling projection.

    A channel with a coupling axis sees its amplitude scaled by cos^2 of the
    angle to the pump polarization; the pair rate carries the square of the
    amplitude factor.
    """
    channels = []
    rates = []
    for cc in cfg.channels:
        ch = cc.channel
        rate = cc.rate_per_mw_hz
        if cc.coupling_angle_rad is not None:
            c2 = math.cos(cfg.pump.polarization_angle_rad
                          - cc.coupling_angle_rad) ** 2
            ch = dataclasses.replace(ch, amplitude=ch.amplitude * c2)
            rate *= c2 * c2
        channels.append(ch)
        rates.append(rate)
    return channels, rates


def build_chain(cfg: ExperimentConfig, dispersion: bool | None = None) -> DetectionChain:
    use_dispersion = cfg.dispersion.enabled if dispersion is None else dispersion
    return DetectionChain(
        efficiency_per_arm=cfg.detection.efficiency_per_arm,
        jitter_combined_ps=cfg.detection.jitter_combined_ps,
        jitter_is_fwhm=cfg.detection.jitter_is_fwhm,
        dispersion_slope_ps_per_nm=(cfg.dispersion.slope_ps_per_nm
                                    if use_dispersion else 0.0),
        dispersion_ref_lambda_nm=cfg.dispersion.ref_lambda_nm,
        deadtime_ps=cfg.detection.deadtime_ps,
        filter_passband_nm=(cfg.detection.passband_lo_nm,
                            cfg.detection.passband_hi_nm))


def run_simulation(cfg: ExperimentConfig, *, seed: int | None = None,
                   power_mw: float | None = None,
                   duration_s: float | None = None,
                   dispersion: bool | None = None) -> DetectedTags:
    """Generate pair and background events and detect them to time tags."""
    seed = cfg.acquisition.master_seed if seed is None else seed
    duration = cfg.acquisition.duration_s if duration_s is None else duration_s
    pump = cfg.pump
    if power_mw is not None:
        pump = PumpConfig(lambda_pump_nm=pump.lambda_pump_nm,
                          power_mw=power_mw,
                          polarization_angle_rad=pump.polarization_angle_rad)
    channels, rates = effective_channels(cfg)
    passband = (cfg.detection.passband_lo_nm, cfg.detection.passband_hi_nm)
    pairs = sample_pair_events(channels, pump, rates, duration, seed,
                               passband_nm=passband, analyzer=cfg.analyzer)
    background = None
    bg_rate = cfg.pl_rate_per_mw_per_detector_hz * pump.power_mw
    if bg_rate > 0.0:
        background = sample_background_events(bg_rate, duration, seed)
    chain = build_chain(cfg, dispersion)
    return detect(pairs, background, chain, cfg.analyzer, seed,
                  channels=channels)


def analyze_tags(tags_a, tags_b, cfg: ExperimentConfig,
                 duration_s: float | None = None) -> AnalysisResult:
    """Coincidence histogram, g2(0), and background-corrected pair rate."""
    duration = cfg.acquisition.duration_s if duration_s is None else duration_s
    hist = build_histogram(tags_a, tags_b,
                           bin_width_ps=cfg.histogram.bin_width_ps,
                           window_ps=cfg.histogram.window_ps,
                           duration_s=duration)
    guard = cfg.histogram.guard_bins
    return AnalysisResult(histogram=hist,
                          g2=g2_zero(hist, guard_bins=guard),
                          rate=real_coincidence_rate(hist, guard_bins=guard))


def _calibration(cfg: ExperimentConfig) -> DispersionCalibration:
    return DispersionCalibration(
        slope_ps_per_nm=cfg.dispersion.slope_ps_per_nm,
        ref_lambda_nm=cfg.dispersion.ref_lambda_nm,
        fiber_length_km=cfg.dispersion.fiber_length_km)


def tof_spectrum(tags_a, tags_b, cfg: ExperimentConfig) -> SpectrumEstimate:
    """Wavelength spectrum from coincidence delays through the fiber.

    Raises ValueError when the config has dispersion disabled: without the
    dispersive delay there is nothing mapping time to wavelength.
    """
    if not cfg.dispersion.enabled:
        raise ValueError("dispersion required for a time-of-flight spectrum")
    cal = _calibration(cfg)
    deltas = coincidence_deltas(tags_a, tags_b, window_ps=cfg.histogram.window_ps)
    grid = (cfg.spectrum.grid_lo_nm, cfg.spectrum.grid_hi_nm,
            cfg.spectrum.grid_step_nm)
    resolution = estimate_resolution(cal, cfg.detection.jitter_combined_ps,
                                     cfg.detection.jitter_is_fwhm)
    return accumulate_spectrum(deltas, cal, cfg.pump.lambda_pump_nm, grid,
                               resolution_nm=resolution)


def _accidental_floor_per_nm(grid_nm, rho_per_ps: float, slope: float,
                             lambda_pump_nm: float, window_ps: float):
    """Per-bin accidental entry density (counts/nm) in the pair spectrum.

    A uniform delay density rho does not map to a flat wavelength floor: the
    delay of the pair containing wavelength lam changes by
    slope * (1 + (conj/lam)^2) ps per nm, so that Jacobian tilts the floor
    (about +14% at 1490 nm and -7% at 1640 nm for a 790.8 nm pump relative
    to the flat 4*slope*rho value, which holds only at degeneracy).  Bins
    whose pair delay falls outside the histogram window get no accidentals.
    """
    lam = np.asarray(grid_nm, dtype=float)
    conj = 1.0 / (1.0 / lambda_pump_nm - 1.0 / lam)
    density = 2.0 * slope * rho_per_ps * (1.0 + (conj / lam) ** 2)
    reachable = slope * np.abs(lam - conj) <= window_ps
    return np.where(reachable, density, 0.0)


def split_rates(hist: CoincidenceHistogram, spectrum: SpectrumEstimate,
                cfg: ExperimentConfig):
    """Split the real pair rate into inside/outside the narrow peak window.

    The accidental background under the spectrum is estimated from the far
    histogram bins and mapped to a per-wavelength-bin floor through the
    delay-to-wavelength Jacobian before the spectral fraction is formed.
    """
    slope = abs(cfg.dispersion.slope_ps_per_nm)
    span = cfg.detection.passband_hi_nm - cfg.detection.passband_lo_nm
    try:
        rho = accidental_density_per_ps(hist, exclude_within_ps=slope * span)
    except ValueError:
        rho = 0.0
    floor_per_nm = _accidental_floor_per_nm(
        spectrum.grid_nm, rho, slope, cfg.pump.lambda_pump_nm,
        cfg.histogram.window_ps)
    window = (cfg.spectrum.peak_window_lo_nm, cfg.spectrum.peak_window_hi_nm)
    return channel_rate_split(hist, spectrum, window,
                              accidental_floor_per_nm=floor_per_nm,
                              guard_bins=cfg.histogram.guard_bins)


def _point_seed(master_seed: int, index: int) -> int:
    seq = np.random.SeedSequence(master_seed, spawn_key=(17, index))
    return int(seq.generate_state(1, np.uint64)[0])


def run_power_sweep(cfg: ExperimentConfig, powers_mw, duration_s: float,
                    *, seed: int | None = None):
    """Measure the pair rate at several pump powers and fit a line.

    Returns (points, fit) where points is a list of (power_mw, RateEstimate).
    Rates are measured without dispersion so the coincidence peak stays in
    one bin.  Each point runs on an independent substream of the master seed.
    """
    master = cfg.acquisition.master_seed if seed is None else seed
    points = []
    for i, power in enumerate(powers_mw):
        tags = run_simulation(cfg, seed=_point_seed(master, i),
                              power_mw=float(power), duration_s=duration_s,
                              dispersion=False)
        result = analyze_tags(tags.tags_a, tags.tags_b, cfg,
                              duration_s=duration_s)
        points.append((float(power), result.rate))
    return points, power_sweep_fit(points)

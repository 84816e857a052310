"""Coincidence analysis of detector time-tag streams.

Arrival-time differences use the sign convention delta_t = t_B - t_A.  The
histogram has an odd number of bins, 2*floor(window/bin_width) + 1, with the
central bin containing delta_t = 0; candidate pairs are collected over the
full span covered by those bins.  Accidental (uncorrelated) coincidences are
estimated from the off-peak bins, excluding a guard region around the center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CoincidenceHistogram",
    "RateEstimate",
    "LinearFit",
    "build_histogram",
    "coincidence_deltas",
    "g2_zero",
    "real_coincidence_rate",
    "accidental_density_per_ps",
    "power_sweep_fit",
    "channel_rate_split",
]


@dataclass(frozen=True)
class RateEstimate:
    value_hz: float
    sigma_hz: float

    def __post_init__(self):
        if self.sigma_hz < 0:
            raise ValueError("sigma must be nonnegative")


@dataclass
class CoincidenceHistogram:
    """Binned counts of arrival-time differences t_B - t_A."""

    bin_width_ps: int
    window_ps: int
    counts: np.ndarray
    duration_s: float
    singles_a: int
    singles_b: int

    @property
    def n_bins(self) -> int:
        return int(self.counts.size)

    @property
    def central_index(self) -> int:
        return self.n_bins // 2

    def bin_centers(self) -> np.ndarray:
        k = self.central_index
        return (np.arange(self.n_bins) - k) * self.bin_width_ps

    def off_peak(self, guard_bins: int = 1) -> np.ndarray:
        """Counts outside the central bin and its guard region."""
        k = self.central_index
        lo = max(0, k - guard_bins)
        hi = min(self.n_bins, k + guard_bins + 1)
        return np.concatenate([self.counts[:lo], self.counts[hi:]])


def _check_sorted(tags, name):
    tags = np.asarray(tags, dtype=np.int64)
    if tags.size > 1 and np.any(np.diff(tags) < 0):
        raise ValueError(f"time tags {name} are not sorted")
    return tags


def _candidate_deltas(tags_a, tags_b, lo_ps: int, hi_ps: int) -> np.ndarray:
    """All t_b - t_a differences with the difference in [lo_ps, hi_ps].

    Vectorized two-pointer expansion: for the sorted streams the matching
    b-range of consecutive a-tags advances monotonically, located here with
    searchsorted and expanded with arange arithmetic.  Cost is O((N_A + N_B)
    * log + C) with C the number of candidate pairs.
    """
    if tags_a.size == 0 or tags_b.size == 0:
        return np.empty(0, dtype=np.int64)
    lo = np.searchsorted(tags_b, tags_a + lo_ps, side="left")
    hi = np.searchsorted(tags_b, tags_a + hi_ps, side="right")
    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    starts = np.cumsum(counts) - counts
    flat = np.arange(total, dtype=np.int64) - np.repeat(starts, counts) + np.repeat(lo, counts)
    return tags_b[flat] - np.repeat(tags_a, counts)


def coincidence_deltas(tags_a, tags_b, window_ps: int) -> np.ndarray:
    """Raw arrival-time differences t_B - t_A with |delta_t| <= window_ps."""
    a = _check_sorted(tags_a, "A")
    b = _check_sorted(tags_b, "B")
    return _candidate_deltas(a, b, -int(window_ps), int(window_ps))


def build_histogram(tags_a, tags_b, bin_width_ps: int = 900, window_ps: int = 4500,
                    duration_s: float | None = None) -> CoincidenceHistogram:
    """Coincidence histogram of two sorted time-tag streams.

    The counts array has 2*floor(window/bin_width) + 1 bins centered on
    delta_t = 0 and candidate pairs are collected over the bins' full span,
    so the edge bins are complete.  duration_s defaults to the latest tag
    (acquisitions start at t = 0), which matters only for rate estimates.
    """
    if bin_width_ps <= 0 or window_ps <= 0:
        raise ValueError("bin_width_ps and window_ps must be positive")
    a = _check_sorted(tags_a, "A")
    b = _check_sorted(tags_b, "B")
    k = int(window_ps) // int(bin_width_ps)
    n_bins = 2 * k + 1
    bw = int(bin_width_ps)
    # bins cover delta_t in [-(k*bw + bw//2), k*bw + (bw - 1)//2] exactly
    lo_ps = -(k * bw + bw // 2)
    hi_ps = k * bw + (bw - 1) // 2
    deltas = _candidate_deltas(a, b, lo_ps, hi_ps)
    counts = np.zeros(n_bins, dtype=np.int64)
    if deltas.size:
        idx = (2 * deltas + bw) // (2 * bw) + k
        counts += np.bincount(idx, minlength=n_bins)
    if duration_s is None:
        last = max(int(a[-1]) if a.size else 0, int(b[-1]) if b.size else 0)
        duration_s = last / 1e12
    return CoincidenceHistogram(
        bin_width_ps=bw, window_ps=int(window_ps), counts=counts,
        duration_s=float(duration_s), singles_a=int(a.size), singles_b=int(b.size))


def _off_peak_stats(hist: CoincidenceHistogram, guard_bins: int):
    if not np.any(hist.counts):
        raise ValueError("no coincidences")
    off = hist.off_peak(guard_bins)
    if off.size == 0:
        raise ValueError("no off-peak bins outside the guard region")
    return float(off.mean()), int(off.size)


def g2_zero(hist: CoincidenceHistogram, guard_bins: int = 1) -> float:
    """Second-order correlation at zero delay: central bin over mean off-peak.

    Returns math.inf when the off-peak background is empty (pair source
    without background), which is the documented flag for that case.
    """
    acc_mean, _ = _off_peak_stats(hist, guard_bins)
    central = float(hist.counts[hist.central_index])
    if acc_mean == 0.0:
        return math.inf
    return central / acc_mean


def real_coincidence_rate(hist: CoincidenceHistogram, guard_bins: int = 1) -> RateEstimate:
    """Accidental-subtracted coincidence rate in the central bin.

    value = (C_central - mean_off_peak) / duration with Poisson propagation
    sigma = sqrt(C_central + mean_off_peak * (1 + 1/n_off_peak)) / duration.
    """
    acc_mean, n_off = _off_peak_stats(hist, guard_bins)
    if hist.duration_s <= 0:
        raise ValueError("histogram duration must be positive for rates")
    central = float(hist.counts[hist.central_index])
    value = (central - acc_mean) / hist.duration_s
    sigma = math.sqrt(central + acc_mean * (1.0 + 1.0 / n_off)) / hist.duration_s
    return RateEstimate(value, sigma)


def accidental_density_per_ps(hist: CoincidenceHistogram, exclude_within_ps: float) -> float:
    """Mean accidental count density (per ps of delta_t) from far-out bins.

    Uses only bins lying entirely beyond +-exclude_within_ps, where no
    physical delay mechanism can place correlated pairs.
    """
    centers = hist.bin_centers()
    sel = np.abs(centers) - 0.5 * hist.bin_width_ps >= exclude_within_ps
    if not np.any(sel):
        raise ValueError("no histogram bins beyond the exclusion range")
    return float(hist.counts[sel].mean()) / hist.bin_width_ps


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float
    slope_sigma: float
    intercept_sigma: float


def power_sweep_fit(points) -> LinearFit:
    """Weighted least-squares line through (power, rate) measurements.

    Weights are 1/sigma^2 when every point carries a positive sigma,
    otherwise the fit is unweighted and parameter sigmas come from the
    residual variance.  R^2 is computed against the weighted mean; a
    zero-variance target with zero residuals reports R^2 = 1.
    """
    points = list(points)
    if len(points) < 3:
        raise ValueError("power sweep fit needs at least 3 points")
    x = np.array([float(p) for p, _ in points])
    y = np.array([r.value_hz for _, r in points])
    s = np.array([r.sigma_hz for _, r in points])
    known_sigmas = bool(np.all(s > 0))
    w = 1.0 / s**2 if known_sigmas else np.ones_like(y)
    sw = w.sum()
    xm = (w * x).sum() / sw
    ym = (w * y).sum() / sw
    sxx = (w * (x - xm) ** 2).sum()
    if sxx == 0:
        raise ValueError("powers are degenerate")
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    ss_res = float((w * resid**2).sum())
    ss_tot = float((w * (y - ym) ** 2).sum())
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res < 1e-20 else 0.0
    if known_sigmas:
        var_scale = 1.0
    else:
        dof = max(1, len(points) - 2)
        var_scale = ss_res / dof
    slope_sigma = math.sqrt(var_scale / sxx)
    intercept_sigma = math.sqrt(var_scale * (1.0 / sw + xm**2 / sxx))
    return LinearFit(float(slope), float(intercept), float(r2),
                     float(slope_sigma), float(intercept_sigma))


def channel_rate_split(hist: CoincidenceHistogram, spectrum, window_nm,
                       accidental_floor_per_nm: float = 0.0,
                       guard_bins: int = 1) -> tuple[RateEstimate, RateEstimate]:
    """Split the real coincidence rate into a spectral window and its rest.

    Every real pair deposits two wavelength entries in the spectrum, so the
    narrow channel's rate is its window entry excess over 2 * duration.  The
    excess is measured above a local pedestal (mean of flanking bins on both
    sides) after removing the accidental floor, which keeps the estimate
    independent of how well the floor model integrates over the full grid.
    The rest-of-spectrum rate is the total real rate minus the window rate,
    so the two always sum to the total; the rest can fluctuate below zero
    when the window holds essentially all pairs.

    Args:
        window_nm: (low, high) wavelength window of the narrow channel.
        accidental_floor_per_nm: accidental contribution to the spectrum in
            counts per nm, either one flat value or one value per spectrum
            bin (a uniform delay density maps to a wavelength floor with a
            Jacobian tilt, so per-bin values are more faithful).
    """
    lo, hi = float(window_nm[0]), float(window_nm[1])
    if not lo < hi:
        raise ValueError("empty spectral window")
    grid = np.asarray(spectrum.grid_nm, dtype=float)
    step = float(grid[1] - grid[0])
    if lo < grid[0] - 0.5 * step or hi > grid[-1] + 0.5 * step:
        raise ValueError("window outside spectral range")
    total = real_coincidence_rate(hist, guard_bins)
    floor = np.asarray(accidental_floor_per_nm, dtype=float)
    if floor.ndim not in (0, 1) or (floor.ndim == 1 and floor.size != grid.size):
        raise ValueError("accidental floor must be scalar or one value per bin")
    # no clipping: rectifying noisy floor-subtracted bins at zero would bias
    # the window sum upward by half the absolute noise in every empty bin
    raw = np.asarray(spectrum.counts, dtype=float)
    counts = raw - floor * step
    in_win = (grid >= lo) & (grid <= hi)
    n_win = int(in_win.sum())
    if n_win == 0:
        raise ValueError("window narrower than one spectrum bin")
    # pedestal under the peak from flanks of comparable width on each side
    n_flank = max(3, n_win // 2)
    first, last_ = int(np.argmax(in_win)), int(len(grid) - 1 - np.argmax(in_win[::-1]))
    left = slice(max(0, first - n_flank), first)
    right = slice(last_ + 1, last_ + 1 + n_flank)
    flanks = np.concatenate([counts[left], counts[right]])
    pedestal = float(flanks.mean()) if flanks.size else 0.0
    excess = max(0.0, float(counts[in_win].sum()) - pedestal * n_win)
    rate_in_hz = excess / (2.0 * hist.duration_s)
    # Poisson variance of the excess: raw window counts plus the scaled-up
    # flank counts behind the pedestal mean
    var_excess = float(raw[in_win].sum())
    if flanks.size:
        var_excess += (n_win / flanks.size) ** 2 * float(raw[left].sum() + raw[right].sum())
    sig_in = math.sqrt(var_excess) / (2.0 * hist.duration_s)
    rate_in = RateEstimate(rate_in_hz, sig_in)
    rate_out = RateEstimate(total.value_hz - rate_in_hz,
                            math.hypot(total.sigma_hz, sig_in))
    return rate_in, rate_out

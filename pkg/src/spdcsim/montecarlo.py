"""Event-level Monte Carlo of pair emission and the detection chain.

Emission and detection draw from per-block substreams of a master seed
(numpy SeedSequence spawn keys), with every block drawn in full and then
windowed.  That makes event streams reproducible bit for bit and independent
of how an acquisition is partitioned: generating [0, 45) s and [45, 600) s
separately yields exactly the same events as one [0, 600) s call.  Times are
kept in picoseconds as float64 until tags are rounded to integer picoseconds
at the end of the detection chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import (AnalyzerSetting, PumpConfig, ResonanceChannel,
                       channel_weight, conjugate_wavelength,
                       joint_spectral_intensity, lorentzian_amplitude)

__all__ = [
    "BLOCK_S",
    "PairEvents",
    "BackgroundEvents",
    "DetectionChain",
    "DetectedTags",
    "sample_pair_events",
    "sample_background_events",
    "detect",
]

BLOCK_S = 30.0
_BLOCK_PS = BLOCK_S * 1e12
_FWHM_OVER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))

# substream kinds; sub distinguishes parallel streams within a kind
_KIND_PAIRS = 1
_KIND_BACKGROUND = 2
_KIND_DETECT = 3
_KIND_MIXED = 4

MIXED_CHANNEL_ID = "mixed"


def _rng(master_seed: int, kind: int, sub: int, block: int) -> np.random.Generator:
    seq = np.random.SeedSequence(master_seed, spawn_key=(kind, sub, block))
    return np.random.default_rng(seq)


def _block_range(t_start_s: float, duration_s: float):
    if duration_s <= 0.0:
        return range(0)
    first = int(math.floor(t_start_s / BLOCK_S))
    last = int(math.ceil((t_start_s + duration_s) / BLOCK_S))
    return range(first, last)


@dataclass
class PairEvents:
    """Columnar store of emitted photon pairs."""

    t_ps: np.ndarray
    lambda_signal_nm: np.ndarray
    lambda_idler_nm: np.ndarray
    channel: np.ndarray

    def __len__(self) -> int:
        return self.t_ps.size

    @staticmethod
    def empty() -> "PairEvents":
        return PairEvents(np.empty(0), np.empty(0), np.empty(0),
                          np.empty(0, dtype="<U1"))

    @staticmethod
    def concat(parts) -> "PairEvents":
        parts = list(parts)
        if not parts:
            return PairEvents.empty()
        return PairEvents(
            np.concatenate([p.t_ps for p in parts]),
            np.concatenate([p.lambda_signal_nm for p in parts]),
            np.concatenate([p.lambda_idler_nm for p in parts]),
            np.concatenate([p.channel for p in parts]))


@dataclass
class BackgroundEvents:
    """Columnar store of uncorrelated single-photon background."""

    t_ps: np.ndarray
    detector: np.ndarray

    def __len__(self) -> int:
        return self.t_ps.size

    @staticmethod
    def empty() -> "BackgroundEvents":
        return BackgroundEvents(np.empty(0), np.empty(0, dtype=np.int8))

    @staticmethod
    def concat(parts) -> "BackgroundEvents":
        parts = list(parts)
        if not parts:
            return BackgroundEvents.empty()
        return BackgroundEvents(
            np.concatenate([p.t_ps for p in parts]),
            np.concatenate([p.detector for p in parts]))


@dataclass(frozen=True)
class DetectionChain:
    """Detector-pair model: efficiency, timing jitter, fiber, deadtime.

    jitter_combined_ps is the pair-difference jitter; the per-tag sigma is
    that value divided by sqrt(2) (and by 2.3548 first when given as a FWHM).
    A nonzero dispersion slope delays each photon by
    slope * (lambda - ref_lambda) before tagging.
    """

    efficiency_per_arm: float = 1.0
    jitter_combined_ps: float = 162.0
    jitter_is_fwhm: bool = True
    dispersion_slope_ps_per_nm: float = 0.0
    dispersion_ref_lambda_nm: float = 1581.6
    deadtime_ps: float = 0.0
    filter_passband_nm: tuple = (1450.0, 1650.0)

    def __post_init__(self):
        if not 0.0 <= self.efficiency_per_arm <= 1.0:
            raise ValueError("efficiency_per_arm must lie in [0, 1]")
        if self.jitter_combined_ps < 0.0:
            raise ValueError("jitter_combined_ps must be nonnegative")
        if self.deadtime_ps < 0.0:
            raise ValueError("deadtime_ps must be nonnegative")
        lo, hi = self.filter_passband_nm
        if not lo < hi:
            raise ValueError("filter_passband_nm must be an increasing pair")

    @property
    def tag_sigma_ps(self) -> float:
        sigma_pair = self.jitter_combined_ps
        if self.jitter_is_fwhm:
            sigma_pair /= _FWHM_OVER_SIGMA
        return sigma_pair / math.sqrt(2.0)


@dataclass
class DetectedTags:
    """Integer-picosecond time tags per detector, each sorted ascending."""

    tags_a: np.ndarray
    tags_b: np.ndarray

    def __len__(self) -> int:
        return self.tags_a.size + self.tags_b.size


def _inverse_cdf_sampler(density_fn, lo: float, hi: float, n: int = 20001):
    """Tabulated inverse-CDF sampler for a nonnegative density on [lo, hi]."""
    grid = np.linspace(lo, hi, n)
    pdf = np.asarray(density_fn(grid), dtype=float)
    if np.any(pdf < 0.0) or not np.all(np.isfinite(pdf)):
        raise ValueError("density must be finite and nonnegative")
    cell = 0.5 * (pdf[1:] + pdf[:-1])
    cdf = np.concatenate(([0.0], np.cumsum(cell)))
    if cdf[-1] <= 0.0:
        raise ValueError("density vanishes on the sampling band")
    cdf /= cdf[-1]

    def sample(u):
        return np.interp(u, cdf, grid)

    return sample


def sample_pair_events(channels, pump: PumpConfig, rate_per_mw_hz, duration_s: float,
                       seed: int, *, passband_nm=(1450.0, 1650.0),
                       analyzer: AnalyzerSetting | None = None,
                       t_start_s: float = 0.0) -> PairEvents:
    """Draw photon-pair emission events over an acquisition window.

    Each channel is an independent Poisson process at rate_per_mw_hz (scalar
    or one value per channel) times the pump power.  Signal wavelengths are
    drawn from the channel's squared amplitude profile restricted to
    passband_nm; idlers follow from energy conservation and may land outside
    the band (the detection filter handles them later).

    With an enabled analyzer the channels lose their which-path identity:
    a single merged stream is drawn from the post-analyzer interference
    density at the projection-weighted total rate, labeled "mixed".
    """
    channels = list(channels)
    if not channels:
        raise ValueError("no emission channels")
    if pump.power_mw <= 0.0:
        raise ValueError("pump power must be positive")
    if t_start_s < 0.0:
        raise ValueError("t_start_s must be nonnegative")
    rates = np.broadcast_to(np.asarray(rate_per_mw_hz, dtype=float),
                            (len(channels),))
    if np.any(rates < 0.0):
        raise ValueError("rate_per_mw_hz must be nonnegative")
    lo, hi = passband_nm
    if not lo < hi:
        raise ValueError("passband_nm must be an increasing pair")

    mixed = analyzer is not None and analyzer.enabled
    if mixed:
        weights = np.array([abs(channel_weight(ch, analyzer)) ** 2
                            for ch in channels])
        total_rate = float(np.sum(rates * weights))
        streams = [(_KIND_MIXED, 0, MIXED_CHANNEL_ID, total_rate,
                    lambda lam: joint_spectral_intensity(
                        lam, channels, analyzer, indistinguishable=True))]
    else:
        streams = []
        for ci, ch in enumerate(channels):
            streams.append((_KIND_PAIRS, ci, ch.id, float(rates[ci]),
                            lambda lam, c=ch: np.abs(
                                lorentzian_amplitude(lam, c)) ** 2))

    t_end_s = t_start_s + duration_s
    parts = []
    for kind, sub, label, rate_hz, density in streams:
        if rate_hz == 0.0:
            continue
        sampler = _inverse_cdf_sampler(density, lo, hi)
        mean_per_block = rate_hz * pump.power_mw * BLOCK_S
        for block in _block_range(t_start_s, duration_s):
            rng = _rng(seed, kind, sub, block)
            n_full = rng.poisson(mean_per_block)
            t_s = (block + rng.random(n_full)) * BLOCK_S
            lam_s = sampler(rng.random(n_full))
            keep = (t_s >= t_start_s) & (t_s < t_end_s)
            if not np.any(keep):
                continue
            t_s, lam_s = t_s[keep], lam_s[keep]
            lam_i = conjugate_wavelength(lam_s, pump.lambda_pump_nm)
            parts.append(PairEvents(
                t_ps=t_s * 1e12,
                lambda_signal_nm=lam_s,
                lambda_idler_nm=np.asarray(lam_i, dtype=float),
                channel=np.full(t_s.size, label)))
    return PairEvents.concat(parts)


def sample_background_events(rate_per_detector_hz: float, duration_s: float,
                             seed: int, *, t_start_s: float = 0.0) -> BackgroundEvents:
    """Draw uncorrelated background counts on both detectors.

    The rate is per detector and already includes any collection losses; the
    detection step only applies analyzer halving, jitter, and deadtime to
    these events.
    """
    if rate_per_detector_hz < 0.0:
        raise ValueError("rate_per_detector_hz must be nonnegative")
    if t_start_s < 0.0:
        raise ValueError("t_start_s must be nonnegative")
    t_end_s = t_start_s + duration_s
    mean_per_block = rate_per_detector_hz * BLOCK_S
    parts = []
    for block in _block_range(t_start_s, duration_s):
        rng = _rng(seed, _KIND_BACKGROUND, 0, block)
        for det in (0, 1):
            n_full = rng.poisson(mean_per_block)
            t_s = (block + rng.random(n_full)) * BLOCK_S
            t_s = t_s[(t_s >= t_start_s) & (t_s < t_end_s)]
            parts.append(BackgroundEvents(
                t_ps=t_s * 1e12,
                detector=np.full(t_s.size, det, dtype=np.int8)))
    return BackgroundEvents.concat(parts)


def _apply_deadtime(tags: np.ndarray, deadtime_ps: float) -> np.ndarray:
    if deadtime_ps <= 0.0 or tags.size == 0:
        return tags
    kept = np.empty(tags.size, dtype=bool)
    last = -math.inf
    for i, t in enumerate(tags):
        ok = t - last >= deadtime_ps
        kept[i] = ok
        if ok:
            last = t
    return tags[kept]


def detect(pairs: PairEvents | None, background: BackgroundEvents | None,
           chain: DetectionChain, analyzer: AnalyzerSetting | None,
           seed: int, channels=None) -> DetectedTags:
    """Run emission events through the detection chain to integer time tags.

    Per 30 s block, events are put in a canonical order (time, then
    wavelength or detector) so the draws do not depend on how the inputs were
    generated or concatenated.  For each pair the fixed draw sequence is:
    analyzer survival, per-photon efficiency, per-photon routing, per-photon
    jitter.  Channel-labeled pairs facing an enabled analyzer are thinned by
    the squared pair projection, which requires the emitting channels to be
    passed in; "mixed" pairs were already drawn from the post-analyzer
    density.  Background events are halved by an enabled analyzer.
    Timestamps gain the dispersive delay slope*(lambda - ref), Gaussian tag
    jitter, rounding to integer picoseconds, and an optional nonparalyzable
    deadtime per detector.
    """
    if pairs is None:
        pairs = PairEvents.empty()
    if background is None:
        background = BackgroundEvents.empty()
    analyzing = analyzer is not None and analyzer.enabled

    pair_keep_p = None
    if analyzing and len(pairs):
        labeled = [c for c in np.unique(pairs.channel) if c != MIXED_CHANNEL_ID]
        if labeled:
            if channels is None:
                raise ValueError(
                    "analyzer thinning of labeled pairs needs the channel list")
            by_id = {ch.id: abs(channel_weight(ch, analyzer)) ** 2
                     for ch in channels}
            missing = [c for c in labeled if c not in by_id]
            if missing:
                raise ValueError(f"unknown pair channel ids: {missing}")
            pair_keep_p = np.array(
                [1.0 if c == MIXED_CHANNEL_ID else by_id[c]
                 for c in pairs.channel])

    lo, hi = chain.filter_passband_nm
    sigma_tag = chain.tag_sigma_ps
    slope = chain.dispersion_slope_ps_per_nm
    ref = chain.dispersion_ref_lambda_nm

    pair_blocks = np.floor_divide(pairs.t_ps, _BLOCK_PS).astype(np.int64)
    bg_blocks = np.floor_divide(background.t_ps, _BLOCK_PS).astype(np.int64)
    all_blocks = np.union1d(np.unique(pair_blocks), np.unique(bg_blocks))

    out_t = []
    out_det = []
    for block in all_blocks:
        idx = np.flatnonzero(pair_blocks == block)
        if idx.size:
            order = np.lexsort((pairs.lambda_signal_nm[idx], pairs.t_ps[idx]))
            idx = idx[order]
            n = idx.size
            rng = _rng(seed, _KIND_DETECT, 0, int(block))
            u_analyzer = rng.random(n)
            u_eff = rng.random((n, 2))
            u_route = rng.random((n, 2))
            jit = rng.standard_normal((n, 2))
            keep_pair = np.ones(n, dtype=bool)
            if pair_keep_p is not None:
                keep_pair = u_analyzer < pair_keep_p[idx]
            lam = np.column_stack((pairs.lambda_signal_nm[idx],
                                   pairs.lambda_idler_nm[idx]))
            photon_ok = (keep_pair[:, None]
                         & (lam >= lo) & (lam <= hi)
                         & (u_eff < chain.efficiency_per_arm))
            t = pairs.t_ps[idx][:, None] + slope * (lam - ref) + sigma_tag * jit
            det = (u_route >= 0.5).astype(np.int8)
            out_t.append(t[photon_ok])
            out_det.append(det[photon_ok])
        idx = np.flatnonzero(bg_blocks == block)
        if idx.size:
            order = np.lexsort((background.detector[idx], background.t_ps[idx]))
            idx = idx[order]
            m = idx.size
            rng = _rng(seed, _KIND_DETECT, 1, int(block))
            u_keep = rng.random(m)
            jit = rng.standard_normal(m)
            ok = u_keep < 0.5 if analyzing else np.ones(m, dtype=bool)
            t = background.t_ps[idx] + sigma_tag * jit
            out_t.append(t[ok])
            out_det.append(background.detector[idx][ok])

    if out_t:
        t_all = np.concatenate(out_t)
        det_all = np.concatenate(out_det)
    else:
        t_all = np.empty(0)
        det_all = np.empty(0, dtype=np.int8)
    tags = np.rint(t_all).astype(np.int64)
    np.maximum(tags, 0, out=tags)
    streams = []
    for det in (0, 1):
        s = np.sort(tags[det_all == det])
        streams.append(_apply_deadtime(s, chain.deadtime_ps))
    return DetectedTags(tags_a=streams[0], tags_b=streams[1])

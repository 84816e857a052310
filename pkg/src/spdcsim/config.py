"""Experiment configuration: dataclasses, INI serialization, hashing.

Configs are stored as INI text with one [channel:<id>] section per emission
channel.  All angles are radians and all floats are written with repr so a
load/save cycle is lossless.  config_sha256 hashes the canonical dump, which
contains no timestamps, so equal configs hash equal.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, field
from importlib import resources

from .spectral import AnalyzerSetting, PumpConfig, ResonanceChannel

__all__ = [
    "ChannelConfig",
    "DispersionConfig",
    "DetectionConfig",
    "AcquisitionConfig",
    "HistogramConfig",
    "SpectrumConfig",
    "ExperimentConfig",
    "load_config",
    "save_config",
    "dumps_config",
    "loads_config",
    "config_sha256",
    "load_preset",
    "preset_names",
]


@dataclass(frozen=True)
class ChannelConfig:
    """One emission channel plus its pair generation rate.

    coupling_angle_rad, when set, is the channel's pump-coupling axis: the
    emitted amplitude scales by cos^2 of the angle between it and the pump
    polarization (and the pair rate by the square of that).
    """

    channel: ResonanceChannel
    rate_per_mw_hz: float
    coupling_angle_rad: float | None = None

    def __post_init__(self):
        if self.rate_per_mw_hz < 0.0:
            raise ValueError("rate_per_mw_hz must be nonnegative")


@dataclass(frozen=True)
class DispersionConfig:
    enabled: bool = True
    slope_ps_per_nm: float = 34.0
    ref_lambda_nm: float = 1581.6
    fiber_length_km: float = 2.0


@dataclass(frozen=True)
class DetectionConfig:
    efficiency_per_arm: float = 1.0
    jitter_combined_ps: float = 162.0
    jitter_is_fwhm: bool = True
    deadtime_ps: float = 0.0
    passband_lo_nm: float = 1450.0
    passband_hi_nm: float = 1650.0


@dataclass(frozen=True)
class AcquisitionConfig:
    duration_s: float = 600.0
    master_seed: int = 20260401


@dataclass(frozen=True)
class HistogramConfig:
    bin_width_ps: int = 900
    window_ps: int = 9450
    guard_bins: int = 1


@dataclass(frozen=True)
class SpectrumConfig:
    grid_lo_nm: float = 1450.0
    grid_hi_nm: float = 1650.0
    grid_step_nm: float = 0.5
    peak_window_lo_nm: float = 1571.6
    peak_window_hi_nm: float = 1591.6


@dataclass(frozen=True)
class ExperimentConfig:
    pump: PumpConfig
    channels: tuple
    analyzer: AnalyzerSetting = AnalyzerSetting()
    detection: DetectionConfig = DetectionConfig()
    dispersion: DispersionConfig = DispersionConfig()
    acquisition: AcquisitionConfig = AcquisitionConfig()
    histogram: HistogramConfig = HistogramConfig()
    spectrum: SpectrumConfig = SpectrumConfig()
    pl_rate_per_mw_per_detector_hz: float = 0.0

    def __post_init__(self):
        if not self.channels:
            raise ValueError("config needs at least one channel")
        ids = [c.channel.id for c in self.channels]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate channel ids")
        if self.pl_rate_per_mw_per_detector_hz < 0.0:
            raise ValueError("pl rate must be nonnegative")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float, complex)):
        return repr(value)
    return str(value)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def dumps_config(cfg: ExperimentConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str

    parser["pump"] = {
        "lambda_nm": _fmt(cfg.pump.lambda_pump_nm),
        "power_mw": _fmt(cfg.pump.power_mw),
        "polarization_angle_rad": _fmt(cfg.pump.polarization_angle_rad),
    }
    for cc in cfg.channels:
        ch = cc.channel
        section = {
            "lambda0_nm": _fmt(ch.lambda0_nm),
            "gamma_nm": _fmt(ch.gamma_nm),
            "amplitude": _fmt(ch.amplitude),
            "phase_rad": _fmt(ch.phase_rad),
            "polarization_x": _fmt(complex(ch.polarization[0])),
            "polarization_y": _fmt(complex(ch.polarization[1])),
            "rate_per_mw_hz": _fmt(cc.rate_per_mw_hz),
        }
        if cc.coupling_angle_rad is not None:
            section["coupling_angle_rad"] = _fmt(cc.coupling_angle_rad)
        parser[f"channel:{ch.id}"] = section
    parser["analyzer"] = {
        "enabled": _fmt(cfg.analyzer.enabled),
        "angle_rad": _fmt(cfg.analyzer.angle_rad),
    }
    d = cfg.detection
    parser["detection"] = {
        "efficiency_per_arm": _fmt(d.efficiency_per_arm),
        "jitter_combined_ps": _fmt(d.jitter_combined_ps),
        "jitter_is_fwhm": _fmt(d.jitter_is_fwhm),
        "deadtime_ps": _fmt(d.deadtime_ps),
        "passband_lo_nm": _fmt(d.passband_lo_nm),
        "passband_hi_nm": _fmt(d.passband_hi_nm),
    }
    dd = cfg.dispersion
    parser["dispersion"] = {
        "enabled": _fmt(dd.enabled),
        "slope_ps_per_nm": _fmt(dd.slope_ps_per_nm),
        "ref_lambda_nm": _fmt(dd.ref_lambda_nm),
        "fiber_length_km": _fmt(dd.fiber_length_km),
    }
    parser["acquisition"] = {
        "duration_s": _fmt(cfg.acquisition.duration_s),
        "master_seed": _fmt(cfg.acquisition.master_seed),
    }
    parser["background"] = {
        "pl_rate_per_mw_per_detector_hz": _fmt(cfg.pl_rate_per_mw_per_detector_hz),
    }
    h = cfg.histogram
    parser["histogram"] = {
        "bin_width_ps": _fmt(h.bin_width_ps),
        "window_ps": _fmt(h.window_ps),
        "guard_bins": _fmt(h.guard_bins),
    }
    s = cfg.spectrum
    parser["spectrum"] = {
        "grid_lo_nm": _fmt(s.grid_lo_nm),
        "grid_hi_nm": _fmt(s.grid_hi_nm),
        "grid_step_nm": _fmt(s.grid_step_nm),
        "peak_window_lo_nm": _fmt(s.peak_window_lo_nm),
        "peak_window_hi_nm": _fmt(s.peak_window_hi_nm),
    }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def loads_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(text)

    def need(section: str):
        if not parser.has_section(section):
            raise ValueError(f"config missing [{section}] section")
        return parser[section]

    p = need("pump")
    pump = PumpConfig(
        lambda_pump_nm=float(p["lambda_nm"]),
        power_mw=float(p["power_mw"]),
        polarization_angle_rad=float(p.get("polarization_angle_rad", "0.0")))

    channels = []
    for name in parser.sections():
        if not name.startswith("channel:"):
            continue
        sec = parser[name]
        ch = ResonanceChannel(
            id=name.split(":", 1)[1],
            lambda0_nm=float(sec["lambda0_nm"]),
            gamma_nm=float(sec["gamma_nm"]),
            amplitude=float(sec["amplitude"]),
            phase_rad=float(sec.get("phase_rad", "0.0")),
            polarization=(complex(sec.get("polarization_x", "(1+0j)")),
                          complex(sec.get("polarization_y", "0j"))))
        coupling = sec.get("coupling_angle_rad")
        channels.append(ChannelConfig(
            channel=ch,
            rate_per_mw_hz=float(sec["rate_per_mw_hz"]),
            coupling_angle_rad=None if coupling is None else float(coupling)))
    if not channels:
        raise ValueError("config has no [channel:<id>] sections")

    a = need("analyzer")
    analyzer = AnalyzerSetting(enabled=_parse_bool(a.get("enabled", "false")),
                               angle_rad=float(a.get("angle_rad", "0.0")))

    d = need("detection")
    detection = DetectionConfig(
        efficiency_per_arm=float(d.get("efficiency_per_arm", "1.0")),
        jitter_combined_ps=float(d.get("jitter_combined_ps", "162.0")),
        jitter_is_fwhm=_parse_bool(d.get("jitter_is_fwhm", "true")),
        deadtime_ps=float(d.get("deadtime_ps", "0.0")),
        passband_lo_nm=float(d.get("passband_lo_nm", "1450.0")),
        passband_hi_nm=float(d.get("passband_hi_nm", "1650.0")))

    dd = need("dispersion")
    dispersion = DispersionConfig(
        enabled=_parse_bool(dd.get("enabled", "true")),
        slope_ps_per_nm=float(dd.get("slope_ps_per_nm", "34.0")),
        ref_lambda_nm=float(dd.get("ref_lambda_nm", "1581.6")),
        fiber_length_km=float(dd.get("fiber_length_km", "2.0")))

    acq = need("acquisition")
    acquisition = AcquisitionConfig(
        duration_s=float(acq["duration_s"]),
        master_seed=int(acq["master_seed"]))

    bg = parser["background"] if parser.has_section("background") else {}
    pl_rate = float(bg.get("pl_rate_per_mw_per_detector_hz", "0.0"))

    h = need("histogram")
    histogram = HistogramConfig(
        bin_width_ps=int(h.get("bin_width_ps", "900")),
        window_ps=int(h.get("window_ps", "9450")),
        guard_bins=int(h.get("guard_bins", "1")))

    s = need("spectrum")
    spectrum = SpectrumConfig(
        grid_lo_nm=float(s.get("grid_lo_nm", "1450.0")),
        grid_hi_nm=float(s.get("grid_hi_nm", "1650.0")),
        grid_step_nm=float(s.get("grid_step_nm", "0.5")),
        peak_window_lo_nm=float(s.get("peak_window_lo_nm", "1571.6")),
        peak_window_hi_nm=float(s.get("peak_window_hi_nm", "1591.6")))

    return ExperimentConfig(
        pump=pump, channels=tuple(channels), analyzer=analyzer,
        detection=detection, dispersion=dispersion, acquisition=acquisition,
        histogram=histogram, spectrum=spectrum,
        pl_rate_per_mw_per_detector_hz=pl_rate)


def load_config(path) -> ExperimentConfig:
    with open(path, "r") as fh:
        return loads_config(fh.read())


def preset_names() -> list[str]:
    """Names of the configurations shipped with the package."""
    root = resources.files(__package__) / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_preset(name: str) -> ExperimentConfig:
    """Load a packaged preset configuration by name (see preset_names)."""
    root = resources.files(__package__) / "presets"
    path = root / f"{name}.cfg"
    if not path.is_file():
        known = ", ".join(preset_names())
        raise ValueError(f"unknown preset {name!r} (available: {known})")
    return loads_config(path.read_text())


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_config(cfg))


def config_sha256(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(dumps_config(cfg).encode()).hexdigest()

"""Digital twin of a metasurface biphoton interference experiment."""

__version__ = "0.1.0"

from .coincidence import (
    CoincidenceHistogram,
    build_histogram,
    coincidence_deltas,
    g2_zero,
    real_coincidence_rate,
)
from .config import ExperimentConfig, load_config, load_preset, preset_names
from .fanofit import FanoFitResult, FanoParams, evaluate_model, fit
from .montecarlo import DetectionChain, PairEvents, detect, sample_pair_events
from .pipeline import analyze_tags, run_power_sweep, run_simulation, tof_spectrum
from .spectral import (
    AnalyzerSetting,
    PumpConfig,
    ResonanceChannel,
    channel_weight,
    conjugate_wavelength,
    joint_spectral_intensity,
    linear_polarization,
    lorentzian_amplitude,
)
from .tof import (
    DispersionCalibration,
    SpectrumEstimate,
    accumulate_spectrum,
    estimate_resolution,
    fwhm,
    peak_wavelength,
)

__all__ = [
    "__version__",
    "AnalyzerSetting",
    "CoincidenceHistogram",
    "DetectionChain",
    "DispersionCalibration",
    "ExperimentConfig",
    "FanoFitResult",
    "FanoParams",
    "PairEvents",
    "PumpConfig",
    "ResonanceChannel",
    "SpectrumEstimate",
    "accumulate_spectrum",
    "analyze_tags",
    "build_histogram",
    "channel_weight",
    "coincidence_deltas",
    "conjugate_wavelength",
    "detect",
    "estimate_resolution",
    "evaluate_model",
    "fit",
    "fwhm",
    "g2_zero",
    "joint_spectral_intensity",
    "linear_polarization",
    "load_config",
    "load_preset",
    "lorentzian_amplitude",
    "peak_wavelength",
    "preset_names",
    "real_coincidence_rate",
    "run_power_sweep",
    "run_simulation",
    "sample_pair_events",
    "tof_spectrum",
]

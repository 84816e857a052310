"""Spectral amplitude model for biphoton emission from overlapping resonances.

Each emission channel is a Lorentzian line in wavelength carrying a constant
phase factor and a Jones-style pair polarization.  ``gamma_nm`` is the FWHM of
the amplitude profile; the squared profile (the wavelength sampling density)
is narrower by sqrt(sqrt(2) - 1) ~ 0.6436.  Channels interfere at amplitude
level only when a polarization analyzer projects them onto a common axis or
when their pair polarizations overlap; otherwise they add at intensity level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ResonanceChannel",
    "PumpConfig",
    "AnalyzerSetting",
    "linear_polarization",
    "lorentzian_amplitude",
    "channel_weight",
    "joint_spectral_intensity",
    "conjugate_wavelength",
]


def linear_polarization(angle_rad: float) -> tuple[complex, complex]:
    """Unit Jones vector of a linear polarization at the given axis angle."""
    return (complex(np.cos(angle_rad)), complex(np.sin(angle_rad)))


@dataclass(frozen=True)
class ResonanceChannel:
    """One biphoton emission channel (a single metasurface resonance).

    Attributes:
        id: short label, e.g. "ed-qbic".
        lambda0_nm: center wavelength.
        gamma_nm: full width at half maximum of the amplitude profile.
        amplitude: nonnegative coupling strength (arbitrary units).
        phase_rad: constant phase of the emission amplitude.
        polarization: unit Jones vector shared by both photons of a pair.
    """

    id: str
    lambda0_nm: float
    gamma_nm: float
    amplitude: float
    phase_rad: float = 0.0
    polarization: tuple[complex, complex] = (1.0 + 0.0j, 0.0 + 0.0j)

    def __post_init__(self):
        if not self.lambda0_nm > 0:
            raise ValueError("lambda0_nm must be positive")
        if not self.gamma_nm > 0:
            raise ValueError("gamma_nm must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        ex, ey = self.polarization
        norm = abs(ex) ** 2 + abs(ey) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError("polarization must be a unit Jones vector")


@dataclass(frozen=True)
class PumpConfig:
    lambda_pump_nm: float
    power_mw: float
    polarization_angle_rad: float = 0.0

    def __post_init__(self):
        if not self.lambda_pump_nm > 0:
            raise ValueError("lambda_pump_nm must be positive")
        if self.power_mw < 0:
            raise ValueError("power_mw must be nonnegative")


@dataclass(frozen=True)
class AnalyzerSetting:
    """Polarization analyzer in front of the splitter; angle 0 = horizontal."""

    enabled: bool = False
    angle_rad: float = 0.0


def lorentzian_amplitude(lambda_nm, channel: ResonanceChannel):
    """Complex emission amplitude of one channel at the given wavelength(s).

    The line is a Lorentzian density in wavelength,

        a(lam) = A * (g/2)/pi / ((lam - lam0)^2 + (g/2)^2) * exp(i*phase),

    so |a| peaks at 2*A/(pi*g) on resonance and halves at lam0 +- g/2.  The
    phase is constant across the line; interference between channels is then
    set purely by their relative phases and the real line profiles.
    """
    scalar = np.ndim(lambda_nm) == 0
    lam = np.atleast_1d(np.asarray(lambda_nm, dtype=float))
    hw = 0.5 * channel.gamma_nm
    mag = channel.amplitude * (hw / np.pi) / ((lam - channel.lambda0_nm) ** 2 + hw * hw)
    out = mag * np.exp(1j * channel.phase_rad)
    return complex(out[0]) if scalar else out


def channel_weight(channel: ResonanceChannel, analyzer: AnalyzerSetting) -> complex:
    """Amplitude transmission of a photon pair through the analyzer.

    Both photons of a pair share the channel polarization and both traverse
    the analyzer, so the pair amplitude picks up the single-photon projection
    squared: weight = (e_a . e_ch)^2.  A disabled or absent analyzer passes
    everything.
    """
    if analyzer is None or not analyzer.enabled:
        return 1.0 + 0.0j
    ex, ey = channel.polarization
    proj = np.cos(analyzer.angle_rad) * ex + np.sin(analyzer.angle_rad) * ey
    return complex(proj * proj)


def joint_spectral_intensity(lambda_nm, channels, analyzer: AnalyzerSetting,
                             indistinguishable: bool):
    """Combined biphoton spectral intensity of all emission channels.

    Indistinguishable mode with the analyzer enabled projects every channel
    onto the analyzer axis and sums at amplitude level (Fano-type
    interference).  Indistinguishable mode without an analyzer sums the
    amplitudes as Jones vectors, so channels with orthogonal pair
    polarizations cannot interfere and the result reduces to the plain
    intensity sum.  Distinguishable mode always sums intensities of the
    projected channels.
    """
    channels = list(channels)
    if not channels:
        raise ValueError("no emission channels")
    scalar = np.ndim(lambda_nm) == 0
    lam = np.atleast_1d(np.asarray(lambda_nm, dtype=float))
    if indistinguishable:
        if analyzer is not None and analyzer.enabled:
            total = np.zeros(lam.shape, dtype=complex)
            for ch in channels:
                total += channel_weight(ch, analyzer) * lorentzian_amplitude(lam, ch)
            out = np.abs(total) ** 2
        else:
            ax = np.zeros(lam.shape, dtype=complex)
            ay = np.zeros(lam.shape, dtype=complex)
            for ch in channels:
                a = lorentzian_amplitude(lam, ch)
                ex, ey = ch.polarization
                ax += a * ex
                ay += a * ey
            out = np.abs(ax) ** 2 + np.abs(ay) ** 2
    else:
        out = np.zeros(lam.shape, dtype=float)
        for ch in channels:
            w = channel_weight(ch, analyzer)
            out += np.abs(w * lorentzian_amplitude(lam, ch)) ** 2
    return float(out[0]) if scalar else out


def conjugate_wavelength(lambda_signal_nm, lambda_pump_nm: float):
    """Idler wavelength paired with a signal wavelength by energy conservation.

    1/lambda_idler = 1/lambda_pump - 1/lambda_signal.  The degenerate point
    sits at twice the pump wavelength.  Raises ValueError when the signal
    does not lie below the pump energy (lambda_signal <= lambda_pump).
    """
    if not lambda_pump_nm > 0:
        raise ValueError("lambda_pump_nm must be positive")
    scalar = np.ndim(lambda_signal_nm) == 0
    lam_s = np.atleast_1d(np.asarray(lambda_signal_nm, dtype=float))
    if np.any(lam_s <= lambda_pump_nm):
        raise ValueError("signal not below pump energy")
    out = 1.0 / (1.0 / lambda_pump_nm - 1.0 / lam_s)
    return float(out[0]) if scalar else out

"""Sweep the analyzer angle and print the interference dip contrast.

Uses the two-resonance QOM-A configuration, whose channels couple to
orthogonal polarizations.  At each angle both channels are projected onto
the analyzer axis and the indistinguishable spectrum is evaluated on a fine
grid; the dip depth relative to the peak tracks how the Fano interference
washes out as the analyzer rotates toward either channel axis.  Emits
plot-ready CSV to stdout.
"""

import argparse
import math

import numpy as np

from spdcsim.config import load_preset
from spdcsim.pipeline import effective_channels
from spdcsim.spectral import AnalyzerSetting, joint_spectral_intensity


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=19)
    ap.add_argument("--lo-deg", type=float, default=0.0)
    ap.add_argument("--hi-deg", type=float, default=90.0)
    args = ap.parse_args()

    cfg = load_preset("qom-a")
    channels, _ = effective_channels(cfg)
    grid = 1500.0 + 0.01 * np.arange(15001)

    print("angle_deg,dip_depth,dip_nm,peak,peak_nm,contrast")
    for angle in np.linspace(args.lo_deg, args.hi_deg, args.steps):
        analyzer = AnalyzerSetting(enabled=True,
                                   angle_rad=math.radians(angle))
        spec = joint_spectral_intensity(grid, channels, analyzer, True)
        i_dip = int(np.argmin(spec))
        i_peak = int(np.argmax(spec))
        peak = spec[i_peak]
        contrast = spec[i_dip] / peak if peak > 0.0 else math.nan
        print(f"{angle:.1f},{spec[i_dip]:.6e},{grid[i_dip]:.2f},"
              f"{peak:.6e},{grid[i_peak]:.2f},{contrast:.3e}")


if __name__ == "__main__":
    main()

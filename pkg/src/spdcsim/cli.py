"""Command line front end: simulate, analyze, spectrum, fit, sweep.

Every command writes fixed-name files into an output directory (--out, or
the SPDCSIM_OUT environment variable, or the working directory) plus a
manifest.json recording the command, package and tag format versions, the
seed, and the full config text, so a run can be reproduced byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .config import (ExperimentConfig, config_sha256, dumps_config,
                     load_config, load_preset, preset_names)
from .fanofit import PARAM_NAMES, evaluate_model, fit as fit_model
from .pipeline import (analyze_tags, run_power_sweep, run_simulation,
                       split_rates, tof_spectrum)
from .tagio import FORMAT_VERSION, read_tags, write_tags
from .tof import SpectrumEstimate, fwhm, peak_wavelength

__all__ = ["main"]


def _load_cfg(spec: str) -> ExperimentConfig:
    if os.path.exists(spec):
        return load_config(spec)
    if os.sep not in spec and spec in preset_names():
        return load_preset(spec)
    known = ", ".join(preset_names())
    raise ValueError(f"config {spec!r} is neither a file nor a preset "
                     f"(presets: {known})")


def _out_dir(args) -> str:
    out = args.out or os.environ.get("SPDCSIM_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_manifest(out, args, outputs, cfg=None, seed=None, extra=None):
    manifest = {
        "command": args._argv,
        "package_version": __version__,
        "tag_format_version": FORMAT_VERSION,
        "outputs": sorted(outputs),
    }
    if seed is not None:
        manifest["master_seed"] = int(seed)
    if cfg is not None:
        manifest["config_sha256"] = config_sha256(cfg)
        manifest["config"] = dumps_config(cfg)
    if extra:
        manifest.update(extra)
    path = os.path.join(out, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_kv(path, pairs):
    with open(path, "w") as fh:
        for key, value in pairs:
            fh.write(f"{key} = {value}\n")


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _cmd_simulate(args) -> int:
    cfg = _load_cfg(args.config)
    seed = cfg.acquisition.master_seed if args.seed is None else args.seed
    dispersion = {"config": None, "on": True, "off": False}[args.dispersion]
    tags = run_simulation(cfg, seed=seed, power_mw=args.power_mw,
                          duration_s=args.duration_s, dispersion=dispersion)
    out = _out_dir(args)
    name = "tags.bin" if args.format == "bin" else "tags.csv"
    write_tags(os.path.join(out, name), tags.tags_a, tags.tags_b,
               fmt=args.format)
    _write_manifest(out, args, [name], cfg=cfg, seed=seed)
    print(f"wrote {name}: {tags.tags_a.size} + {tags.tags_b.size} tags")
    return 0


def _analysis_inputs(args):
    cfg = _load_cfg(args.config)
    tags_a, tags_b = read_tags(args.tags)
    duration = args.duration_s
    return cfg, tags_a, tags_b, duration


def _cmd_analyze(args) -> int:
    cfg, tags_a, tags_b, duration = _analysis_inputs(args)
    res = analyze_tags(tags_a, tags_b, cfg, duration_s=duration)
    out = _out_dir(args)
    hist = res.histogram
    centers = hist.bin_centers().astype(np.int64)
    with open(os.path.join(out, "histogram.csv"), "w") as fh:
        fh.write("delta_t_ps,count\n")
        for c, n in zip(centers, hist.counts):
            fh.write(f"{int(c)},{int(n)}\n")
    power = cfg.pump.power_mw
    per_mw = res.rate.value_hz / power if power > 0 else float("nan")
    _write_kv(os.path.join(out, "summary.txt"), [
        ("g2_zero", _fmt_float(res.g2)),
        ("real_rate_hz", _fmt_float(res.rate.value_hz)),
        ("real_rate_sigma_hz", _fmt_float(res.rate.sigma_hz)),
        ("rate_per_mw_hz", _fmt_float(per_mw)),
        ("duration_s", _fmt_float(hist.duration_s)),
        ("singles_a", hist.singles_a),
        ("singles_b", hist.singles_b),
        ("coincidences_in_window", int(hist.counts.sum())),
    ])
    _write_manifest(out, args, ["histogram.csv", "summary.txt"], cfg=cfg)
    print(f"g2(0) = {res.g2:.3f}, real rate = {res.rate.value_hz:.4f} "
          f"+- {res.rate.sigma_hz:.4f} Hz")
    return 0


def _cmd_spectrum(args) -> int:
    cfg, tags_a, tags_b, duration = _analysis_inputs(args)
    res = analyze_tags(tags_a, tags_b, cfg, duration_s=duration)
    spec = tof_spectrum(tags_a, tags_b, cfg)
    rate_in, rate_out = split_rates(res.histogram, spec, cfg)
    out = _out_dir(args)
    with open(os.path.join(out, "spectrum.csv"), "w") as fh:
        fh.write("lambda_nm,count\n")
        for lam, n in zip(spec.grid_nm, spec.counts):
            fh.write(f"{lam:.6g},{int(n)}\n")
    try:
        width = fwhm(spec)
    except ValueError:
        width = float("nan")
    _write_kv(os.path.join(out, "spectrum_summary.txt"), [
        ("peak_wavelength_nm", _fmt_float(peak_wavelength(spec))),
        ("fwhm_nm", _fmt_float(width)),
        ("resolution_nm", _fmt_float(spec.resolution_nm)),
        ("window_lo_nm", _fmt_float(cfg.spectrum.peak_window_lo_nm)),
        ("window_hi_nm", _fmt_float(cfg.spectrum.peak_window_hi_nm)),
        ("window_rate_hz", _fmt_float(rate_in.value_hz)),
        ("window_rate_sigma_hz", _fmt_float(rate_in.sigma_hz)),
        ("rest_rate_hz", _fmt_float(rate_out.value_hz)),
        ("rest_rate_sigma_hz", _fmt_float(rate_out.sigma_hz)),
    ])
    _write_manifest(out, args, ["spectrum.csv", "spectrum_summary.txt"],
                    cfg=cfg)
    print(f"peak {peak_wavelength(spec):.2f} nm, fwhm {width:.2f} nm, "
          f"window rate {rate_in.value_hz:.4f} Hz")
    return 0


def _read_spectrum_csv(path) -> SpectrumEstimate:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise ValueError("spectrum csv needs two columns: lambda_nm,count")
    return SpectrumEstimate(data[:, 0], data[:, 1])


def _cmd_fit(args) -> int:
    spec = _read_spectrum_csv(args.spectrum)
    weights = None if args.weights == "none" else args.weights
    res = fit_model(spec, weights=weights, max_iterations=args.max_iterations)
    out = _out_dir(args)
    report = [
        ("converged", "true" if res.converged else "false"),
        ("iterations", res.iterations),
        ("residual_norm", _fmt_float(res.residual_norm)),
    ]
    values = res.params.as_array()
    for name, value, sigma in zip(PARAM_NAMES, values, res.sigmas):
        report.append((name, f"{_fmt_float(value)} +- {_fmt_float(sigma)}"))
    _write_kv(os.path.join(out, "fit_report.txt"), report)
    model = evaluate_model(res.params, spec.grid_nm)
    with open(os.path.join(out, "fit_curve.csv"), "w") as fh:
        fh.write("lambda_nm,model\n")
        for lam, y in zip(spec.grid_nm, model):
            fh.write(f"{lam:.6g},{y:.8g}\n")
    _write_manifest(out, args, ["fit_report.txt", "fit_curve.csv"])
    print(f"converged={res.converged} lambda1={res.lambda1_nm:.2f} nm "
          f"gamma1={res.gamma1_nm:.2f} nm phi={res.phi_rad:.3f} rad")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_cfg(args.config)
    powers = [float(p) for p in args.powers.split(",") if p.strip()]
    seed = cfg.acquisition.master_seed if args.seed is None else args.seed
    points, fit = run_power_sweep(cfg, powers, args.duration_s, seed=seed)
    out = _out_dir(args)
    with open(os.path.join(out, "sweep.csv"), "w") as fh:
        fh.write("power_mw,rate_hz,sigma_hz\n")
        for power, rate in points:
            fh.write(f"{power:.6g},{rate.value_hz:.8g},{rate.sigma_hz:.8g}\n")
    _write_kv(os.path.join(out, "sweep_summary.txt"), [
        ("slope_hz_per_mw", _fmt_float(fit.slope)),
        ("slope_sigma_hz_per_mw", _fmt_float(fit.slope_sigma)),
        ("intercept_hz", _fmt_float(fit.intercept)),
        ("intercept_sigma_hz", _fmt_float(fit.intercept_sigma)),
        ("r_squared", _fmt_float(fit.r_squared)),
    ])
    _write_manifest(out, args, ["sweep.csv", "sweep_summary.txt"],
                    cfg=cfg, seed=seed)
    print(f"slope {fit.slope:.5f} Hz/mW, intercept {fit.intercept:.5f} Hz, "
          f"R^2 {fit.r_squared:.5f}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spdcsim",
        description="Biphoton interference experiment on the command line.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def add_common(p):
        p.add_argument("--out", default=None,
                       help="output directory (default: $SPDCSIM_OUT or .)")

    p = sub.add_parser("simulate", help="generate a time tag stream")
    p.add_argument("--config", required=True,
                   help="config file path or preset name")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--power-mw", type=float, default=None)
    p.add_argument("--duration-s", type=float, default=None)
    p.add_argument("--dispersion", choices=("config", "on", "off"),
                   default="config",
                   help="override the config's dispersive fiber")
    p.add_argument("--format", choices=("bin", "csv"), default="bin")
    add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="histogram and g2 from a tag file")
    p.add_argument("--config", required=True)
    p.add_argument("--tags", required=True, help="tag file from simulate")
    p.add_argument("--duration-s", type=float, default=None,
                   help="acquisition length if not the config's")
    add_common(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("spectrum",
                       help="time-of-flight wavelength spectrum from tags")
    p.add_argument("--config", required=True)
    p.add_argument("--tags", required=True)
    p.add_argument("--duration-s", type=float, default=None)
    add_common(p)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("fit", help="two-resonance model fit of a spectrum")
    p.add_argument("--spectrum", required=True,
                   help="csv with lambda_nm,count columns")
    p.add_argument("--weights", choices=("none", "poisson"), default="none")
    p.add_argument("--max-iterations", type=int, default=500)
    add_common(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("sweep", help="pair rate versus pump power")
    p.add_argument("--config", required=True)
    p.add_argument("--powers", default="5,15,25,35,45,55",
                   help="comma separated pump powers in mW")
    p.add_argument("--duration-s", type=float, default=60.0)
    p.add_argument("--seed", type=int, default=None)
    add_common(p)
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    args._argv = argv
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: mode tables, grating design, sweeps, tolerance and output state.

Exit codes: 0 success, 2 configuration error, 3 mode-solver failure,
4 design failure (no crossing, sweep failure), 5 calibration failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .design import CouplerDesign, DesignError, find_intersection, tolerance_csv
from .material import CalibrationError, OutOfRangeError, Polarization, calibrate_contrast
from .modesolver import CompositionError, ModeCountError, NoModeError, solve_channel_modes
from .quadrature import QuadratureError
from .spdc import (
    UnsupportedPumpError,
    assemble_state,
    entanglement_metrics,
    idler_wavelength,
    port_mapping,
    solve_mode_set,
    state_csv,
)

EXIT_CONFIG, EXIT_SOLVER, EXIT_DESIGN, EXIT_CALIBRATION = 2, 3, 4, 5
MODE_HEADER = "pol,m,n_eff,beta,residual"
SOLVER_ERRORS = (ModeCountError, NoModeError, CompositionError, QuadratureError, OutOfRangeError)

log = logging.getLogger("tricoupler")


def _write(out: Path, name, text):
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def _kv(items):
    return "".join(f"{k} = {v}\n" for k, v in items)


def _grating(cfg: RunConfig, designer: CouplerDesign):
    """Configured grating frequency, or the designed one when no period is set."""
    if cfg.grating_period_um is not None:
        return 2 * np.pi / cfg.grating_period_um
    return designer.design_grating(cfg.pump_mode).grating_frequency


def cmd_modes(cfg: RunConfig, out: Path):
    material, geometry = cfg.material(), cfg.geometry()
    lam_p = cfg.pump_wavelength
    lam_s = cfg.filter_center * 1e-3
    lam_i = idler_wavelength(lam_p, lam_s)
    pump = solve_channel_modes(material, geometry, lam_p, Polarization.H, 2, exact=False)[cfg.pump_mode]
    signal = solve_channel_modes(material, geometry, lam_s, Polarization.H)
    idler = solve_channel_modes(material, geometry, lam_i, Polarization.V)
    rows = [MODE_HEADER]
    for mode in (pump, *signal, *idler):
        rows.append(f"{mode.pol.name},{mode.m},{mode.n_eff:.17g},{mode.beta:.17g},{mode.residual:.17g}")
    _write(out, "modes.csv", "\n".join(rows) + "\n")
    summary = [
        ("pump_wavelength_um", f"{lam_p:.17g}"),
        ("signal_wavelength_um", f"{lam_s:.17g}"),
        ("idler_wavelength_um", f"{lam_i:.17g}"),
        ("pump_mode", cfg.pump_mode),
        ("signal_splitting_beta0_minus_beta2", f"{signal[0].beta - signal[2].beta:.17g}"),
        ("idler_splitting_beta0_minus_beta2", f"{idler[0].beta - idler[2].beta:.17g}"),
    ]
    if max(signal[0].beta - signal[2].beta, idler[0].beta - idler[2].beta) < 1e-6:
        summary.append(("note", "guides effectively decoupled (splitting < 1e-6 rad/um)"))
    text = _kv(summary)
    _write(out, "modes_summary.txt", text)
    return text


def cmd_design(cfg: RunConfig, out: Path):
    designer = CouplerDesign(cfg.material(), cfg.geometry(), cfg.pump_wavelength)
    grating = designer.design_grating(cfg.pump_mode)
    if not grating.feasible:
        log.warning("degenerate K spread %.3g exceeds the single-grating limit", grating.spread)
    K = _grating(cfg, designer)
    spectrum = designer.sweep_signal_wavelength(cfg.pump_mode, K, **cfg.signal_sweep())
    cross = find_intersection(spectrum)
    gratings = designer.sweep_grating(cfg.pump_mode, cfg.grating_start, cfg.grating_stop, cfg.grating_points)
    table = designer.grating_tolerance(cfg.pump_mode, cfg.tolerance_nm, K, **cfg.signal_sweep())
    _write(out, "spectrum_wavelength.csv", spectrum.to_csv())
    _write(out, "spectrum_grating.csv", gratings.to_csv())
    _write(out, "tolerance.csv", tolerance_csv(table))
    items = [
        ("pump_mode", cfg.pump_mode),
        ("processes", " ".join(spectrum.labels)),
        ("designed_grating_frequency_per_um", f"{grating.grating_frequency:.17g}"),
        ("designed_grating_period_um", f"{grating.grating_period:.17g}"),
        ("grating_frequency_per_um", f"{K:.17g}"),
        ("grating_period_um", f"{2 * np.pi / K:.17g}"),
        ("K_required_per_um", " ".join(f"{k:.17g}" for k in grating.K_required)),
        ("degenerate_K_spread_relative", f"{grating.spread:.17g}"),
        ("single_grating_feasible", grating.feasible),
        ("crossing_wavelength_nm", f"{cross.location:.17g}"),
        ("crossing_spread", f"{cross.spread:.17g}"),
    ]
    text = _kv(items)
    _write(out, "design_report.txt", text)
    return text


def cmd_state(cfg: RunConfig, out: Path):
    lo, hi = cfg.signal_start_nm, cfg.signal_stop_nm
    center, half = cfg.filter_center, cfg.filter_width_nm / 2
    if not (lo <= center - half and center + half <= hi):
        raise ConfigError(f"filter window {center} +/- {half} nm leaves the sweep range [{lo}, {hi}] nm")
    material, geometry = cfg.material(), cfg.geometry()
    designer = CouplerDesign(material, geometry, cfg.pump_wavelength, workers=1)
    K = _grating(cfg, designer)
    # narrowband filter: the state is the slice at the filter centre
    modes = solve_mode_set(material, geometry, cfg.pump_wavelength, center * 1e-3, designer.modes)
    state = assemble_state(cfg.pump_mode, modes, K, geometry.length_um, cfg.scale)
    metrics = entanglement_metrics(state, cfg.threshold)
    ports = port_mapping(state)
    _write(out, "state.csv", state_csv(state))
    _write(out, "state_ports.csv", state_csv(ports))
    items = [
        ("filter_center_nm", f"{center:.17g}"),
        ("filter_width_nm", f"{cfg.filter_width_nm:.17g}"),
        ("grating_frequency_per_um", f"{K:.17g}"),
        ("fidelity_to_uniform", f"{metrics['fidelity_to_uniform']:.17g}"),
        ("schmidt_entropy_bits", f"{metrics['schmidt_entropy']:.17g}"),
        ("dimensionality", metrics["dimensionality"]),
        ("terms", " ".join(t.ket for t in ports.terms)),
    ]
    text = _kv(items)
    _write(out, "state_metrics.txt", text)
    return text


def cmd_sweep_wavelength(cfg: RunConfig, out: Path):
    designer = CouplerDesign(cfg.material(), cfg.geometry(), cfg.pump_wavelength)
    K = _grating(cfg, designer)
    spectrum = designer.sweep_signal_wavelength(cfg.pump_mode, K, **cfg.signal_sweep())
    _write(out, "spectrum_wavelength.csv", spectrum.to_csv())
    cross = find_intersection(spectrum)
    return _kv([("grating_frequency_per_um", f"{K:.17g}"), ("crossing_wavelength_nm", f"{cross.location:.17g}"),
                ("crossing_spread", f"{cross.spread:.17g}")])


def cmd_sweep_grating(cfg: RunConfig, out: Path):
    designer = CouplerDesign(cfg.material(), cfg.geometry(), cfg.pump_wavelength, workers=1)
    spectrum = designer.sweep_grating(cfg.pump_mode, cfg.grating_start, cfg.grating_stop, cfg.grating_points,
                                      signal_nm=cfg.filter_center)
    _write(out, "spectrum_grating.csv", spectrum.to_csv())
    cross = find_intersection(spectrum)
    return _kv([("crossing_grating_frequency_per_um", f"{cross.location:.17g}"),
                ("crossing_spread", f"{cross.spread:.17g}")])


def cmd_tolerance(cfg: RunConfig, out: Path):
    designer = CouplerDesign(cfg.material(), cfg.geometry(), cfg.pump_wavelength)
    K = _grating(cfg, designer)
    table = designer.grating_tolerance(cfg.pump_mode, cfg.tolerance_nm, K, **cfg.signal_sweep())
    text = tolerance_csv(table)
    _write(out, "tolerance.csv", text)
    return text


def cmd_calibrate(cfg: RunConfig, out: Path):
    try:
        h, v = calibrate_contrast(cfg.material(), cfg.geometry(), cfg.target_K, cfg.pump_wavelength, cfg.pump_mode)
    except CalibrationError as err:
        items = [("status", "failed"), ("target_K_per_um", f"{cfg.target_K:.17g}"),
                 ("best_residual_per_um", f"{err.best_residual:.17g}")]
        if err.best_contrast:
            items += [("best_delta_n_h", f"{err.best_contrast[0]:.17g}"),
                      ("best_delta_n_v", f"{err.best_contrast[1]:.17g}")]
        _write(out, "calibration.txt", _kv(items))
        raise
    text = _kv([("status", "ok"), ("target_K_per_um", f"{cfg.target_K:.17g}"),
                ("delta_n_h", f"{h:.17g}"), ("delta_n_v", f"{v:.17g}")])
    _write(out, "calibration.txt", text)
    return text


COMMANDS = {
    "modes": cmd_modes,
    "design": cmd_design,
    "state": cmd_state,
    "sweep-wavelength": cmd_sweep_wavelength,
    "sweep-grating": cmd_sweep_grating,
    "tolerance": cmd_tolerance,
    "calibrate": cmd_calibrate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="tricoupler", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--out", help="output directory (overrides output.directory)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    parser.add_argument("--dry-run", action="store_true", help="print the resolved config and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.overrides)
        if args.out:
            cfg = load_config(args.config, [*args.overrides, f"output.directory = {args.out}"])
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if args.dry_run:
        sys.stdout.write(cfg.echo())
        return 0
    try:
        text = COMMANDS[args.command](cfg, Path(cfg.out_dir))
    except (ConfigError, UnsupportedPumpError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationError as err:
        print(f"calibration failed: {err}", file=sys.stderr)
        return EXIT_CALIBRATION
    except SOLVER_ERRORS as err:
        print(f"{args.command}: mode solver failed: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except DesignError as err:
        if isinstance(err.__cause__, SOLVER_ERRORS):
            print(f"{args.command}: mode solver failed: {err}", file=sys.stderr)
            return EXIT_SOLVER
        print(f"design failed: {err}", file=sys.stderr)
        return EXIT_DESIGN
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

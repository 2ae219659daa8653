"""Command-line front end: sweeps, single runs, calibration, rendering.

All physics inputs come from the shared key-value config (see
paper_device.cfg); the CLI only selects the task and the output location.
Outputs are deterministic CSVs (9 significant digits), so repeated runs and
different worker counts produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import fields as dc_fields
from pathlib import Path

from . import config as cfgmod
from . import sweep
from .dressed import (
    dressed_states,
    fit_drive_calibration,
    raman_rates,
    transition_frequency,
)
from .errors import LambdaDetError
from .protocols import (
    DetectionSettings,
    ResetSettings,
    dark_count,
    detection_run,
    detection_trace,
    efficiency_map,
    efficiency_vs_length,
    efficiency_vs_photon_number,
    full_cycle,
    reset_map,
    reset_run,
)
from .render import render_heatmap
from .response import calibrate_signal_power, dip_map, find_matching_point

TWO_PI = 2.0 * math.pi
ENV_CONFIG = "LAMBDADET_CONFIG"


def _load_config(path: str | None) -> cfgmod.RunConfig:
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is None:
        return cfgmod.parse_config("")
    return cfgmod.load_config(path)


def _calibrated_params(cfg: cfgmod.RunConfig):
    params = cfg.params
    if params.drive_power_to_rabi is None:
        omega_d_cal = params.omega_ge - cfg.get("delta_drive")
        constant = fit_drive_calibration(
            params, omega_d_cal, cfg.get("calibration_anchor")
        )
        params = params.with_calibration(constant)
    return params


def _outcome_row(outcome):
    return [getattr(outcome, f.name) for f in dc_fields(outcome)]


def _outcome_header(outcome_cls):
    return [f.name for f in dc_fields(outcome_cls)]


def _write_trace(traj, path):
    rows = [
        (t, pe, n, a.real, a.imag, err)
        for t, pe, n, a, err in zip(
            traj.times, traj.p_excited, traj.photon_number, traj.field, traj.trace_error
        )
    ]
    return sweep.write_csv(
        path, ["t_s", "p_e", "photon_number", "re_a", "im_a", "trace_error"], rows
    )


def cmd_dressed(cfg, params, args, out_dir):
    omega_d = cfg.omega_d
    grid = cfg.get("dressed_pd_grid").values()
    rows = []
    for p_dbm in grid:
        rabi = params.rabi_of_dbm(p_dbm)
        ladder = dressed_states(params, omega_d, rabi)
        rr = raman_rates(ladder, params)
        rows.append(
            [
                rabi,
                p_dbm,
                *[ladder.energy(i) for i in (1, 2, 3, 4)],
                rr.k31,
                rr.k32,
                rr.k41,
                rr.k42,
                transition_frequency(ladder, 1, 4),
                transition_frequency(ladder, 2, 3),
            ]
        )
    header = [
        "rabi_rad_s",
        "p_d_dbm",
        "e1_rad_s",
        "e2_rad_s",
        "e3_rad_s",
        "e4_rad_s",
        "kappa31_rad_s",
        "kappa32_rad_s",
        "kappa41_rad_s",
        "kappa42_rad_s",
        "omega14_rad_s",
        "omega23_rad_s",
    ]
    path = sweep.write_csv(out_dir / "dressed.csv", header, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


def cmd_reflect_map(cfg, params, args, out_dir):
    omega_d = cfg.omega_d
    pd_grid = cfg.get("reflect_pd_grid").values()
    freq_grid = cfg.get("reflect_freq_grid").values()
    probe = cfg.get("probe_flux")
    probe_amp = math.sqrt(probe) if probe > 0 else None
    rmap = dip_map(
        params,
        omega_d,
        pd_grid,
        freq_grid,
        probe_amp,
        n_max=cfg.get("n_max"),
        workers=args.workers or cfg.get("workers"),
    )
    rows = []
    for i, p_dbm in enumerate(rmap.p_d_dbm):
        for j, omega_s in enumerate(rmap.omega_s):
            r = rmap.r[i, j]
            rows.append(
                [
                    p_dbm,
                    omega_s / (TWO_PI * 1e9),
                    abs(r),
                    20.0 * math.log10(max(abs(r), 1e-300)),
                    math.atan2(r.imag, r.real),
                ]
            )
    header = ["P_d_dBm", "omega_s_GHz", "abs_r", "abs_r_dB", "arg_r"]
    path = sweep.write_csv(out_dir / "reflect_map.csv", header, rows)
    point = find_matching_point(rmap)
    print(f"wrote {path} ({len(rows)} rows)")
    print(
        f"matching point: P_d = {point.p_d_dbm:.2f} dBm, "
        f"omega_s/2pi = {point.omega_s / TWO_PI / 1e9:.6f} GHz, "
        f"|r|min = {point.min_abs_r:.4g} "
        f"({20 * math.log10(max(point.min_abs_r, 1e-300)):.1f} dB)"
        + (" [on grid boundary]" if point.on_boundary else "")
    )
    return 2 if (args.strict and rmap.flags) else 0


def cmd_calibrate(cfg, params, args, out_dir):
    from .response import calibration_params

    cal_params = calibration_params(params, cfg.get("gamma_calibration"))
    omega_d = params.omega_ge - cfg.get("pdiff_delta_drive")
    result = calibrate_signal_power(
        cal_params, omega_d, target_db=6.0, n_max=cfg.get("n_max")
    )
    nominal = cfg.get("pdiff_signal_power")
    print(
        f"signal power reproducing P_diff = 6.0 dB: {result.p_s_dbm:.2f} dBm "
        f"(offset {result.p_s_dbm - nominal:+.2f} dB from {nominal} dBm), "
        f"P_diff residual {result.residual_db:+.3f} dB"
    )
    sweep.write_csv(
        out_dir / "calibrate.csv",
        ["p_s_dbm", "p_diff_db", "residual_db", "offset_db"],
        [[result.p_s_dbm, result.p_diff_db, result.residual_db, result.p_s_dbm - nominal]],
    )
    return 0


def _detection_args(cfg, params):
    rabi = params.rabi_of_dbm(cfg.get("drive_power"))
    return dict(
        op_point=(rabi, cfg.get("signal_freq")),
        t_s=cfg.get("t_s"),
        nbar_s=cfg.get("nbar_s"),
        readout=cfg.readout_model(),
        omega_d=cfg.omega_d,
        t_rise=cfg.get("t_rise"),
        opts=cfg.integrator_options(),
        n_max=cfg.get("n_max"),
    )


def cmd_detect(cfg, params, args, out_dir):
    from .protocols import DetectionOutcome

    kw = _detection_args(cfg, params)
    outcome = detection_run(params, **kw)
    path = sweep.write_csv(
        out_dir / "detect.csv", _outcome_header(DetectionOutcome), [_outcome_row(outcome)]
    )
    print(f"wrote {path}")
    print(
        f"P_e = {outcome.p_e:.4f}, P_dark = {outcome.p_dark:.4f}, eta = {outcome.eta:.4f}"
    )
    if args.trace_out:
        traj = detection_trace(params, **kw)
        print(f"wrote {_write_trace(traj, out_dir / 'detect_trace.csv')}")
    return 2 if (args.strict and outcome.flags) else 0


def cmd_detect_map(cfg, params, args, out_dir):
    emap = efficiency_map(
        params,
        cfg.get("detect_pd_grid").values(),
        cfg.get("detect_freq_grid").values(),
        cfg.get("t_s"),
        cfg.get("nbar_s"),
        cfg.readout_model(),
        omega_d=cfg.omega_d,
        t_rise=cfg.get("t_rise"),
        opts=cfg.integrator_options(),
        n_max=cfg.get("n_max"),
        workers=args.workers or cfg.get("workers"),
    )
    rows = []
    for i, p_dbm in enumerate(emap.p_d_dbm):
        for j, omega_s in enumerate(emap.omega_s):
            rows.append(
                [
                    p_dbm,
                    omega_s / (TWO_PI * 1e9),
                    emap.eta[i, j],
                    emap.p_e[i, j],
                    emap.p_dark[i, j],
                ]
            )
    header = ["p_d_dbm", "omega_s_GHz", "eta", "p_e", "p_dark"]
    path = sweep.write_csv(out_dir / "detect_map.csv", header, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    print(
        f"eta_max = {emap.eta_max:.4f} at {emap.argmax_p_d_dbm:.2f} dBm, "
        f"{emap.argmax_omega_s / TWO_PI / 1e9:.6f} GHz"
    )
    if emap.band_above_half:
        lo, hi = emap.band_above_half
        print(
            f"eta > 0.5 band: {(hi - lo) / TWO_PI / 1e6:.1f} MHz "
            f"({lo / TWO_PI / 1e9:.6f} .. {hi / TWO_PI / 1e9:.6f} GHz)"
        )
    return 2 if (args.strict and emap.flags) else 0


def cmd_scan_ts(cfg, params, args, out_dir):
    from .protocols import DetectionOutcome

    rabi = params.rabi_of_dbm(cfg.get("drive_power"))
    outcomes = efficiency_vs_length(
        params,
        (rabi, cfg.get("signal_freq")),
        cfg.get("ts_list"),
        cfg.get("nbar_s"),
        cfg.readout_model(),
        omega_d=cfg.omega_d,
        t_rise=cfg.get("t_rise"),
        opts=cfg.integrator_options(),
        n_max=cfg.get("n_max"),
        workers=args.workers or cfg.get("workers"),
    )
    path = sweep.write_csv(
        out_dir / "scan_ts.csv",
        _outcome_header(DetectionOutcome),
        [_outcome_row(o) for o in outcomes],
    )
    print(f"wrote {path} ({len(outcomes)} rows)")
    best = max(outcomes, key=lambda o: o.eta)
    print(f"max eta = {best.eta:.4f} at t_s = {best.t_s * 1e9:.0f} ns")
    return 0


def cmd_scan_ns(cfg, params, args, out_dir):
    from .protocols import DetectionOutcome

    rabi = params.rabi_of_dbm(cfg.get("drive_power"))
    rows = []
    for t_s in cfg.get("ns_ts_list"):
        outcomes = efficiency_vs_photon_number(
            params,
            (rabi, cfg.get("signal_freq")),
            t_s,
            cfg.get("nbar_list"),
            cfg.readout_model(),
            omega_d=cfg.omega_d,
            t_rise=cfg.get("t_rise"),
            opts=cfg.integrator_options(),
            n_max=cfg.get("n_max"),
            workers=args.workers or cfg.get("workers"),
        )
        rows.extend(_outcome_row(o) for o in outcomes)
    path = sweep.write_csv(
        out_dir / "scan_ns.csv", _outcome_header(DetectionOutcome), rows
    )
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


def cmd_dark(cfg, params, args, out_dir):
    rows = []
    for p_dbm in cfg.get("dark_pd_grid").values():
        rabi = params.rabi_of_dbm(p_dbm)
        p_dark = dark_count(
            params,
            (rabi, cfg.get("signal_freq")),
            cfg.get("t_s"),
            cfg.readout_model(),
            omega_d=cfg.omega_d,
            t_rise=cfg.get("t_rise"),
            opts=cfg.integrator_options(),
            n_max=cfg.get("n_max"),
        )
        rows.append([p_dbm, p_dark])
    path = sweep.write_csv(out_dir / "dark.csv", ["p_d_dbm", "p_dark"], rows)
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


def _reset_args(cfg, params):
    return dict(
        omega_rst=cfg.get("reset_freq"),
        rabi_dr=params.rabi_of_dbm(cfg.get("reset_power")),
        nbar_rst=cfg.get("nbar_rst"),
        t_dr=cfg.get("t_dr"),
        readout=cfg.readout_model(),
        omega_d=cfg.omega_d,
        t_rise=cfg.get("t_rise"),
        opts=cfg.integrator_options(),
        n_max=cfg.get("n_max"),
    )


def cmd_reset(cfg, params, args, out_dir):
    from .protocols import ResetOutcome

    kw = _reset_args(cfg, params)
    outcome = reset_run(params, with_initial_pi=not args.no_pi, **kw)
    path = sweep.write_csv(
        out_dir / "reset.csv", _outcome_header(ResetOutcome), [_outcome_row(outcome)]
    )
    print(f"wrote {path}")
    print(
        f"P_e after reset = {outcome.p_e_after_reset:.4f}, "
        f"without reset pulse = {outcome.p_e_no_reset:.4f}, "
        f"period = {outcome.period * 1e9:.0f} ns ({outcome.rate / 1e6:.2f} MHz)"
    )
    return 2 if (args.strict and outcome.flags) else 0


def cmd_reset_map(cfg, params, args, out_dir):
    rmap = reset_map(
        params,
        cfg.get("reset_pd_grid").values(),
        cfg.get("reset_freq_grid").values(),
        cfg.get("nbar_rst"),
        cfg.get("t_dr"),
        cfg.readout_model(),
        omega_d=cfg.omega_d,
        t_rise=cfg.get("t_rise"),
        opts=cfg.integrator_options(),
        n_max=cfg.get("n_max"),
        workers=args.workers or cfg.get("workers"),
    )
    rows = []
    for i, p_dbm in enumerate(rmap.p_dr_dbm):
        for j, omega_rst in enumerate(rmap.omega_rst):
            rows.append(
                [p_dbm, omega_rst / (TWO_PI * 1e9), rmap.p_e[i, j], rmap.p_e_no_reset[i]]
            )
    header = ["p_dr_dbm", "omega_rst_GHz", "p_e", "p_e_no_reset"]
    path = sweep.write_csv(out_dir / "reset_map.csv", header, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    print(
        f"P_e min = {rmap.p_e_min:.4f} at {rmap.argmin_p_dr_dbm:.2f} dBm, "
        f"{rmap.argmin_omega_rst / TWO_PI / 1e9:.6f} GHz"
    )
    return 2 if (args.strict and rmap.flags) else 0


def cmd_cycle(cfg, params, args, out_dir):
    from .protocols import CycleOutcome

    detect = DetectionSettings(
        rabi=params.rabi_of_dbm(cfg.get("drive_power")),
        omega_s=cfg.get("signal_freq"),
        t_s=cfg.get("t_s"),
        nbar_s=cfg.get("nbar_s"),
        omega_d=cfg.omega_d,
        t_rise=cfg.get("t_rise"),
    )
    reset = ResetSettings(
        rabi_dr=params.rabi_of_dbm(cfg.get("reset_power")),
        omega_rst=cfg.get("reset_freq"),
        nbar_rst=cfg.get("nbar_rst"),
        t_dr=cfg.get("t_dr"),
        omega_d=cfg.omega_d,
        t_rise=cfg.get("t_rise"),
    )
    outcome = full_cycle(
        params,
        detect,
        reset,
        cfg.readout_model(),
        opts=cfg.integrator_options(),
        n_max=cfg.get("n_max"),
        readout_stage=cfg.get("readout_budget"),
    )
    path = sweep.write_csv(
        out_dir / "cycle.csv", _outcome_header(CycleOutcome), [_outcome_row(outcome)]
    )
    print(f"wrote {path}")
    print(
        f"eta after reset = {outcome.eta_after_reset:.4f} (fresh {outcome.eta_fresh:.4f}), "
        f"period = {outcome.period * 1e9:.0f} ns, rate = {outcome.rate / 1e6:.2f} MHz"
    )
    return 2 if (args.strict and outcome.flags) else 0


def cmd_render(cfg, params, args, out_dir):
    out = args.svg_out or (out_dir / (Path(args.csv).stem + ".svg"))
    path = render_heatmap(args.csv, args.x, args.y, args.z, out)
    print(f"wrote {path}")
    return 0


_COMMANDS = {
    "dressed": cmd_dressed,
    "reflect-map": cmd_reflect_map,
    "calibrate": cmd_calibrate,
    "detect": cmd_detect,
    "detect-map": cmd_detect_map,
    "scan-ts": cmd_scan_ts,
    "scan-ns": cmd_scan_ns,
    "dark": cmd_dark,
    "reset": cmd_reset,
    "reset-map": cmd_reset_map,
    "cycle": cmd_cycle,
    "render": cmd_render,
}


_GLOBAL_DEFAULTS = {
    "config": None,
    "out": None,
    "workers": 0,
    "strict": False,
    "trace_out": False,
}


def build_parser() -> argparse.ArgumentParser:
    # the shared flags are accepted both before and after the subcommand;
    # SUPPRESS keeps subparser defaults from clobbering pre-subcommand values
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help=f"config file (default: ${ENV_CONFIG} or built-in)")
    common.add_argument("--out", help="output directory (default from config)")
    common.add_argument("--workers", type=int, help="parallel workers")
    common.add_argument("--strict", action="store_true", help="fail on flagged grid points")
    common.add_argument(
        "--trace-out", action="store_true", help="dump the trajectory CSV for single runs"
    )

    parser = argparse.ArgumentParser(
        prog="lambdadet",
        description="Impedance-matched Lambda-system microwave photon detector simulator",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "reset":
            p.add_argument("--no-pi", action="store_true", default=False,
                           help="skip the initial pi pulse")
        if name == "render":
            p.add_argument("csv", help="input CSV path")
            p.add_argument("x", help="x column name")
            p.add_argument("y", help="y column name")
            p.add_argument("z", help="value column name")
            p.add_argument("--svg-out", default=None, help="output SVG path")
    return parser


def run_sweep(
    cfg: cfgmod.RunConfig,
    task: str,
    *,
    out_dir=None,
    workers: int | None = None,
    strict: bool = False,
    trace_out: bool = False,
) -> int:
    """Execute one sweep task programmatically; returns the exit status.

    Artifacts are deterministic CSVs; identical configs produce byte-identical
    files for any worker count.
    """
    if task not in _COMMANDS or task == "render":
        raise ValueError(f"unknown sweep task {task!r}")
    params = _calibrated_params(cfg)
    args = argparse.Namespace(
        workers=workers or 0,
        strict=strict or cfg.get("strict"),
        trace_out=trace_out,
        no_pi=False,
    )
    out = Path(out_dir or cfg.get("out_dir"))
    return _COMMANDS[task](cfg, params, args, out)


def _progress_printer(done, total):
    print(f"\r{done}/{total} grid points", end="" if done < total else "\n", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for key, value in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    try:
        cfg = _load_config(args.config)
        params = _calibrated_params(cfg)
        out_dir = Path(args.out or cfg.get("out_dir"))
        if args.strict or cfg.get("strict"):
            args.strict = True
        if sys.stderr.isatty():
            sweep.set_progress_hook(_progress_printer)
        return _COMMANDS[args.command](cfg, params, args, out_dir)
    except LambdaDetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())

"""Time-gated protocols: single-photon detection, fast reset, full cycle.

Detection builds the drive + signal schedule, propagates the Lindblad
dynamics, and reads the qubit projectively once the phase-locked readout has
latched: the click reflects P(|e>) at marker + latch_delay, with the drive
tail still acting so the adiabatic dressed component returns to the ground
state instead of counting as a click. The dark count is the identical run
with an empty signal pulse. Efficiency subtracts it:

    eta = (P_e - P_dark) / (1 - exp(-nbar_s))

with the coherent-pulse vacuum probability exp(-nbar_s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dressed import DELTA_DRIVE_DEFAULT
from .dynamics import (
    DensityState,
    IntegratorOptions,
    Trajectory,
    mixed_initial_state,
    propagate,
)
from .errors import IntegrationError, SteadyStateError
from .hilbert import build_space, qubit_number
from .params import SystemParams
from .pulses import (
    ROLE_READOUT_MARKER,
    T_RISE_DEFAULT,
    PulseSchedule,
    auto_drive_length,
    detection_schedule,
    reset_schedule,
    stage_duration,
)

FOCK_CONVERGENCE_TOL = 1e-3
READOUT_BUDGET_DEFAULT = 140e-9  # t_delay2 + acquisition, rate bookkeeping only


@dataclass(frozen=True)
class ReadoutModel:
    """Dispersive-readout imperfections folded onto the simulated P(|e>).

    ``eps_ge``/``eps_eg`` are assignment errors; ``latch_delay`` is the time
    between the readout marker and the moment the reflected readout pulse
    has latched the oscillator phase (default: 60 ns readout pulse plus the
    40 ns pump delay). Relaxation during this window loses the click.
    """

    eps_ge: float = 0.0
    eps_eg: float = 0.0
    latch_delay: float = 100e-9

    def __post_init__(self):
        for eps in (self.eps_ge, self.eps_eg):
            if not 0.0 <= eps < 0.5:
                raise ValueError(f"assignment errors must lie in [0, 0.5), got {eps}")
        if self.latch_delay < 0:
            raise ValueError("latch_delay must be >= 0")

    def click_probability(self, p_e: float) -> float:
        return (1.0 - self.eps_eg) * p_e + self.eps_ge * (1.0 - p_e)


@dataclass(frozen=True)
class DetectionOutcome:
    p_e: float
    p_dark: float
    eta: float
    nbar_s: float
    t_s: float
    rabi: float
    omega_s: float
    p_d_dbm: float
    flags: str = ""

    def __post_init__(self):
        if not (-1e-9 <= self.p_e <= 1.0 + 1e-9):
            raise ValueError(f"P_e = {self.p_e} outside [0, 1]")


@dataclass(frozen=True)
class ResetOutcome:
    p_e_after_reset: float
    p_e_no_reset: float
    rabi_dr: float
    p_dr_dbm: float
    omega_rst: float
    nbar_rst: float
    reset_stage: float
    detect_stage: float
    readout_stage: float
    period: float
    rate: float
    flags: str = ""


@dataclass(frozen=True)
class CycleOutcome:
    eta_after_reset: float
    eta_fresh: float
    p_e_after_reset: float
    period: float
    rate: float
    flags: str = ""


@dataclass(frozen=True)
class DetectionSettings:
    """Operating point of the detection stage."""

    rabi: float
    omega_s: float
    t_s: float
    nbar_s: float
    omega_d: float
    t_rise: float = T_RISE_DEFAULT


@dataclass(frozen=True)
class ResetSettings:
    """Operating point of the reset stage."""

    rabi_dr: float
    omega_rst: float
    nbar_rst: float
    t_dr: float
    omega_d: float
    t_rise: float = T_RISE_DEFAULT


def _p_excited(state: DensityState) -> float:
    pops = np.real(np.diag(state.matrix))
    weights = np.real(np.diag(qubit_number(state.space)))
    return float(pops @ weights)


def _default_omega_d(params: SystemParams) -> float:
    return params.omega_ge - DELTA_DRIVE_DEFAULT


def _click_from_schedule(sched, params, readout, opts, space, rho0=None):
    """Propagate through the schedule and read the click at marker + latch.

    The drive tail keeps acting while the readout latches, so the adiabatic
    dressed component returns to |g> and only genuine excitation counts.
    """
    marker = sched.marker_times()[-1]
    t_click = marker + readout.latch_delay
    if rho0 is None:
        rho0 = mixed_initial_state(space, params.init_excited_pop, sched.frame)
    traj = propagate(rho0, sched, params, opts, until=t_click, extra_samples=(t_click,))
    return readout.click_probability(_p_excited(traj.pinned[t_click])), traj


def _run_detection_once(params, settings, readout, opts, n_max, rho0=None):
    space = build_space(n_max)
    sched = detection_schedule(
        params,
        rabi=settings.rabi,
        omega_d=settings.omega_d,
        omega_s=settings.omega_s,
        t_s=settings.t_s,
        nbar_s=settings.nbar_s,
        t_rise=settings.t_rise,
    )
    return _click_from_schedule(sched, params, readout, opts, space, rho0)


def _fock_flag(value_lo, value_hi, label):
    ref = max(abs(value_lo), 1e-9)
    if abs(value_hi - value_lo) / ref > FOCK_CONVERGENCE_TOL:
        return f"fock-unconverged:{label}:{abs(value_hi - value_lo) / ref:.2e};"
    return ""


def detection_run(
    params: SystemParams,
    op_point: tuple[float, float],
    t_s: float,
    nbar_s: float,
    readout: ReadoutModel = ReadoutModel(),
    *,
    omega_d: float | None = None,
    t_rise: float = T_RISE_DEFAULT,
    opts: IntegratorOptions = IntegratorOptions(),
    n_max: int = 3,
    dark_click: float | None = None,
) -> DetectionOutcome:
    """Single detection protocol run at op_point = (rabi, omega_s).

    The dark count is computed by the identical run with nbar_s = 0 (or
    reused from ``dark_click`` when sweeping a map at fixed drive power).
    With nbar_s = 0 this returns P_e = P_dark exactly and eta = nan.
    """
    rabi, omega_s = op_point
    if omega_d is None:
        omega_d = _default_omega_d(params)
    if rabi > 0:
        params.check_nesting(omega_d)
    settings = DetectionSettings(rabi, omega_s, t_s, nbar_s, omega_d, t_rise)

    flags = ""
    click, _ = _run_detection_once(params, settings, readout, opts, n_max)
    if opts.fock_convergence:
        click_hi, _ = _run_detection_once(params, settings, readout, opts, n_max + 1)
        flags += _fock_flag(click, click_hi, "p_e")

    if nbar_s > 0:
        if dark_click is None:
            dark_settings = replace(settings, nbar_s=0.0)
            dark_click, _ = _run_detection_once(params, dark_settings, readout, opts, n_max)
        eta = (click - dark_click) / (1.0 - math.exp(-nbar_s))
    else:
        dark_click = click
        eta = math.nan

    p_d_dbm = math.nan
    if params.drive_power_to_rabi and rabi > 0:
        p_d_dbm = params.dbm_of_rabi(rabi)
    return DetectionOutcome(
        p_e=click,
        p_dark=dark_click,
        eta=eta,
        nbar_s=nbar_s,
        t_s=t_s,
        rabi=rabi,
        omega_s=omega_s,
        p_d_dbm=p_d_dbm,
        flags=flags,
    )


def detection_trace(
    params: SystemParams,
    op_point: tuple[float, float],
    t_s: float,
    nbar_s: float,
    readout: ReadoutModel = ReadoutModel(),
    *,
    omega_d: float | None = None,
    t_rise: float = T_RISE_DEFAULT,
    opts: IntegratorOptions = IntegratorOptions(),
    n_max: int = 3,
) -> Trajectory:
    """Sampled trajectory of a single detection run (for --trace-out dumps)."""
    rabi, omega_s = op_point
    if omega_d is None:
        omega_d = _default_omega_d(params)
    settings = DetectionSettings(rabi, omega_s, t_s, nbar_s, omega_d, t_rise)
    _, traj = _run_detection_once(params, settings, readout, opts, n_max)
    return traj


def dark_count(
    params: SystemParams,
    op_point: tuple[float, float],
    t_s: float,
    readout: ReadoutModel = ReadoutModel(),
    **kw,
) -> float:
    """Click probability with no signal pulse (nonadiabatic drive excitation
    plus imperfect initialization)."""
    return detection_run(params, op_point, t_s, 0.0, readout, **kw).p_dark


def _detection_task(args):
    (params, rabi, omega_s, t_s, nbar_s, readout, omega_d, t_rise, opts, n_max, dark) = args
    try:
        out = detection_run(
            params,
            (rabi, omega_s),
            t_s,
            nbar_s,
            readout,
            omega_d=omega_d,
            t_rise=t_rise,
            opts=opts,
            n_max=n_max,
            dark_click=dark,
        )
        return out, ""
    except (IntegrationError, SteadyStateError) as exc:
        return None, str(exc)


def _dark_task(args):
    return _detection_task(args)


@dataclass
class EfficiencyMap:
    p_d_dbm: np.ndarray
    omega_s: np.ndarray
    eta: np.ndarray
    p_e: np.ndarray
    p_dark: np.ndarray
    band_above_half: tuple[float, float] | None
    argmax_p_d_dbm: float
    argmax_omega_s: float
    eta_max: float
    flags: list


def efficiency_map(
    params: SystemParams,
    power_grid_dbm,
    freq_grid,
    t_s: float,
    nbar_s: float,
    readout: ReadoutModel = ReadoutModel(),
    *,
    omega_d: float | None = None,
    t_rise: float = T_RISE_DEFAULT,
    opts: IntegratorOptions = IntegratorOptions(),
    n_max: int = 3,
    workers: int = 1,
) -> EfficiencyMap:
    """Detection efficiency over a (P_d, omega_s) grid.

    The dark run is shared per power (it does not involve the signal), and
    the eta > 0.5 band is the omega_s interval where the frequency cut at
    the best drive power stays above one half.
    """
    from .sweep import parallel_map

    power_grid_dbm = np.asarray(power_grid_dbm, dtype=float)
    freq_grid = np.asarray(freq_grid, dtype=float)
    if np.any(np.diff(power_grid_dbm) <= 0) or np.any(np.diff(freq_grid) <= 0):
        raise ValueError("grids must be strictly increasing")
    if omega_d is None:
        omega_d = _default_omega_d(params)

    rabis = [params.rabi_of_dbm(p) for p in power_grid_dbm]
    dark_tasks = [
        (params, rabi, freq_grid[0], t_s, 0.0, readout, omega_d, t_rise, opts, n_max, None)
        for rabi in rabis
    ]
    dark_results = parallel_map(_dark_task, dark_tasks, workers)

    tasks, flags = [], []
    darks = []
    for i, (out, flag) in enumerate(dark_results):
        if out is None:
            darks.append(math.nan)
            flags.append((i, -1, flag))
        else:
            darks.append(out.p_dark)
    for i, rabi in enumerate(rabis):
        for omega_s in freq_grid:
            tasks.append(
                (params, rabi, omega_s, t_s, nbar_s, readout, omega_d, t_rise, opts, n_max, darks[i])
            )
    results = parallel_map(_detection_task, tasks, workers)

    shape = (len(power_grid_dbm), len(freq_grid))
    eta = np.full(shape, np.nan)
    p_e = np.full(shape, np.nan)
    p_dark = np.full(shape, np.nan)
    for k, (out, flag) in enumerate(results):
        i, j = divmod(k, shape[1])
        if out is None:
            flags.append((i, j, flag))
            continue
        eta[i, j] = out.eta
        p_e[i, j] = out.p_e
        p_dark[i, j] = out.p_dark

    flat = int(np.nanargmax(eta))
    i, j = divmod(flat, shape[1])
    band = _band_above(freq_grid, eta[i, :], 0.5)
    from .response import _parabolic_refine

    p_ref, _ = _parabolic_refine(power_grid_dbm, -eta[:, j], i)
    f_ref, _ = _parabolic_refine(freq_grid, -eta[i, :], j)
    return EfficiencyMap(
        power_grid_dbm,
        freq_grid,
        eta,
        p_e,
        p_dark,
        band,
        float(p_ref),
        float(f_ref),
        float(eta[i, j]),
        flags,
    )


def _band_above(x: np.ndarray, y: np.ndarray, level: float):
    """Interval where y > level, with linear interpolation at the crossings."""
    above = y > level
    if not np.any(above):
        return None
    idx = np.nonzero(above)[0]
    lo_i, hi_i = idx[0], idx[-1]
    lo = x[lo_i]
    if lo_i > 0 and np.isfinite(y[lo_i - 1]):
        frac = (level - y[lo_i - 1]) / (y[lo_i] - y[lo_i - 1])
        lo = x[lo_i - 1] + frac * (x[lo_i] - x[lo_i - 1])
    hi = x[hi_i]
    if hi_i < len(x) - 1 and np.isfinite(y[hi_i + 1]):
        frac = (level - y[hi_i + 1]) / (y[hi_i] - y[hi_i + 1])
        hi = x[hi_i + 1] - frac * (x[hi_i + 1] - x[hi_i])
    return (float(lo), float(hi))


def efficiency_vs_length(
    params: SystemParams,
    op_point: tuple[float, float],
    t_s_values,
    nbar_s: float,
    readout: ReadoutModel = ReadoutModel(),
    *,
    workers: int = 1,
    **kw,
) -> list[DetectionOutcome]:
    """eta(t_s) with the drive length auto-adjusted per point."""
    from .sweep import parallel_map

    rabi, omega_s = op_point
    omega_d = kw.pop("omega_d", None) or _default_omega_d(params)
    opts = kw.pop("opts", IntegratorOptions())
    n_max = kw.pop("n_max", 3)
    t_rise = kw.pop("t_rise", T_RISE_DEFAULT)
    tasks = [
        (params, rabi, omega_s, t_s, nbar_s, readout, omega_d, t_rise, opts, n_max, None)
        for t_s in t_s_values
    ]
    results = parallel_map(_detection_task, tasks, workers)
    outcomes = []
    for (out, flag), t_s in zip(results, t_s_values):
        if out is None:
            raise IntegrationError(f"t_s = {t_s * 1e9:.0f} ns failed: {flag}")
        outcomes.append(out)
    return outcomes


def efficiency_vs_photon_number(
    params: SystemParams,
    op_point: tuple[float, float],
    t_s: float,
    nbar_values,
    readout: ReadoutModel = ReadoutModel(),
    *,
    workers: int = 1,
    **kw,
) -> list[DetectionOutcome]:
    """eta(nbar_s) at fixed pulse length; the dark run is shared."""
    from .sweep import parallel_map

    rabi, omega_s = op_point
    omega_d = kw.pop("omega_d", None) or _default_omega_d(params)
    opts = kw.pop("opts", IntegratorOptions())
    n_max = kw.pop("n_max", 3)
    t_rise = kw.pop("t_rise", T_RISE_DEFAULT)
    dark = detection_run(
        params, op_point, t_s, 0.0, readout, omega_d=omega_d, t_rise=t_rise,
        opts=opts, n_max=n_max,
    ).p_dark
    tasks = [
        (params, rabi, omega_s, t_s, nbar, readout, omega_d, t_rise, opts, n_max, dark)
        for nbar in nbar_values
    ]
    results = parallel_map(_detection_task, tasks, workers)
    outcomes = []
    for (out, flag), nbar in zip(results, nbar_values):
        if out is None:
            raise IntegrationError(f"nbar_s = {nbar} failed: {flag}")
        outcomes.append(out)
    return outcomes


def reset_run(
    params: SystemParams,
    omega_rst: float,
    rabi_dr: float,
    nbar_rst: float,
    t_dr: float,
    with_initial_pi: bool = True,
    readout: ReadoutModel = ReadoutModel(),
    *,
    omega_d: float | None = None,
    t_rise: float = T_RISE_DEFAULT,
    opts: IntegratorOptions = IntegratorOptions(),
    n_max: int = 3,
    with_baseline: bool = True,
    detect_stage: float | None = None,
    readout_stage: float = READOUT_BUDGET_DEFAULT,
) -> ResetOutcome:
    """Reset protocol: optional instant pi pulse, then drive + reset tone.

    ``p_e_no_reset`` is the same run with the reset tone removed (pure T1
    decay under the drive), computed unless ``with_baseline`` is False.
    """
    if omega_d is None:
        omega_d = _default_omega_d(params)
    params.check_nesting(omega_d)

    def run(nbar, cutoff):
        space = build_space(cutoff)
        sched = reset_schedule(
            params,
            rabi_dr=rabi_dr,
            omega_d=omega_d,
            omega_rst=omega_rst,
            nbar_rst=nbar,
            t_dr=t_dr,
            t_rise=t_rise,
            with_initial_pi=with_initial_pi,
        )
        click, _ = _click_from_schedule(sched, params, readout, opts, space)
        return click

    flags = ""
    p_after = run(nbar_rst, n_max)
    if opts.fock_convergence:
        p_hi = run(nbar_rst, n_max + 1)
        flags += _fock_flag(p_after, p_hi, "p_e")
    p_no_reset = run(0.0, n_max) if with_baseline else math.nan

    reset_stage = stage_duration(t_dr, t_rise)
    if detect_stage is None:
        detect_stage = stage_duration(auto_drive_length(85e-9), t_rise)
    period = reset_stage + detect_stage + readout_stage
    p_dr_dbm = math.nan
    if params.drive_power_to_rabi and rabi_dr > 0:
        p_dr_dbm = params.dbm_of_rabi(rabi_dr)
    return ResetOutcome(
        p_e_after_reset=p_after,
        p_e_no_reset=p_no_reset,
        rabi_dr=rabi_dr,
        p_dr_dbm=p_dr_dbm,
        omega_rst=omega_rst,
        nbar_rst=nbar_rst,
        reset_stage=reset_stage,
        detect_stage=detect_stage,
        readout_stage=readout_stage,
        period=period,
        rate=1.0 / period,
        flags=flags,
    )


def _reset_task(args):
    (params, omega_rst, rabi_dr, nbar_rst, t_dr, readout, omega_d, t_rise, opts, n_max, baseline) = args
    try:
        out = reset_run(
            params,
            omega_rst,
            rabi_dr,
            nbar_rst,
            t_dr,
            True,
            readout,
            omega_d=omega_d,
            t_rise=t_rise,
            opts=opts,
            n_max=n_max,
            with_baseline=baseline,
        )
        return out, ""
    except (IntegrationError, SteadyStateError) as exc:
        return None, str(exc)


@dataclass
class ResetMap:
    p_dr_dbm: np.ndarray
    omega_rst: np.ndarray
    p_e: np.ndarray
    p_e_no_reset: np.ndarray
    argmin_p_dr_dbm: float
    argmin_omega_rst: float
    p_e_min: float
    flags: list


def reset_map(
    params: SystemParams,
    power_grid_dbm,
    freq_grid,
    nbar_rst: float,
    t_dr: float,
    readout: ReadoutModel = ReadoutModel(),
    *,
    omega_d: float | None = None,
    t_rise: float = T_RISE_DEFAULT,
    opts: IntegratorOptions = IntegratorOptions(),
    n_max: int = 3,
    workers: int = 1,
) -> ResetMap:
    """P(|e>) after the reset over a (P_dr, omega_rst) grid, with argmin."""
    from .response import _parabolic_refine
    from .sweep import parallel_map

    power_grid_dbm = np.asarray(power_grid_dbm, dtype=float)
    freq_grid = np.asarray(freq_grid, dtype=float)
    if np.any(np.diff(power_grid_dbm) <= 0) or np.any(np.diff(freq_grid) <= 0):
        raise ValueError("grids must be strictly increasing")
    if omega_d is None:
        omega_d = _default_omega_d(params)

    rabis = [params.rabi_of_dbm(p) for p in power_grid_dbm]
    base_tasks = [
        (params, freq_grid[0], rabi, 0.0, t_dr, readout, omega_d, t_rise, opts, n_max, False)
        for rabi in rabis
    ]
    base_results = parallel_map(_reset_task, base_tasks, workers)

    tasks = []
    for rabi in rabis:
        for omega_rst in freq_grid:
            tasks.append(
                (params, omega_rst, rabi, nbar_rst, t_dr, readout, omega_d, t_rise, opts, n_max, False)
            )
    results = parallel_map(_reset_task, tasks, workers)

    shape = (len(power_grid_dbm), len(freq_grid))
    p_e = np.full(shape, np.nan)
    p_e_base = np.full(len(power_grid_dbm), np.nan)
    flags = []
    for i, (out, flag) in enumerate(base_results):
        if out is None:
            flags.append((i, -1, flag))
        else:
            p_e_base[i] = out.p_e_after_reset
    for k, (out, flag) in enumerate(results):
        i, j = divmod(k, shape[1])
        if out is None:
            flags.append((i, j, flag))
            continue
        p_e[i, j] = out.p_e_after_reset

    flat = int(np.nanargmin(p_e))
    i, j = divmod(flat, shape[1])
    p_ref, _ = _parabolic_refine(power_grid_dbm, p_e[:, j], i)
    f_ref, _ = _parabolic_refine(freq_grid, p_e[i, :], j)
    return ResetMap(
        power_grid_dbm,
        freq_grid,
        p_e,
        p_e_base,
        float(p_ref),
        float(f_ref),
        float(p_e[i, j]),
        flags,
    )


def full_cycle(
    params: SystemParams,
    detect: DetectionSettings,
    reset: ResetSettings | None,
    readout: ReadoutModel = ReadoutModel(),
    *,
    opts: IntegratorOptions = IntegratorOptions(),
    n_max: int = 3,
    readout_stage: float = READOUT_BUDGET_DEFAULT,
) -> CycleOutcome:
    """Reset stage followed by detection on the post-reset state.

    The whole cycle runs as a single schedule in the detection frame; the
    reset tone enters as an explicitly oscillating term at its carrier
    detuning. The period uses the nominal stage bookkeeping (plateau plus
    one t_rise per edge, plus the readout budget).
    """
    space = build_space(n_max)

    def cycle_click(nbar_s):
        entries = []
        t0 = 0.0
        if reset is not None:
            r_sched = reset_schedule(
                params,
                rabi_dr=reset.rabi_dr,
                omega_d=reset.omega_d,
                omega_rst=reset.omega_rst,
                nbar_rst=reset.nbar_rst,
                t_dr=reset.t_dr,
                t_rise=reset.t_rise,
                with_initial_pi=True,
                resonator_ref=detect.omega_s,
            )
            entries.extend(e for e in r_sched.entries if e[0] != ROLE_READOUT_MARKER)
            t0 = r_sched.marker_times()[-1]
        d_sched = detection_schedule(
            params,
            rabi=detect.rabi,
            omega_d=detect.omega_d,
            omega_s=detect.omega_s,
            t_s=detect.t_s,
            nbar_s=nbar_s,
            t_rise=detect.t_rise,
            start=t0,
        )
        entries.extend(d_sched.entries)
        sched = PulseSchedule(tuple(entries), d_sched.frame, d_sched.duration)
        click, _ = _click_from_schedule(sched, params, readout, opts, space)
        return click

    click = cycle_click(detect.nbar_s)
    dark = cycle_click(0.0)
    eta_after = (click - dark) / (1.0 - math.exp(-detect.nbar_s))

    fresh = detection_run(
        params,
        (detect.rabi, detect.omega_s),
        detect.t_s,
        detect.nbar_s,
        readout,
        omega_d=detect.omega_d,
        t_rise=detect.t_rise,
        opts=opts,
        n_max=n_max,
    )

    detect_stage = stage_duration(auto_drive_length(detect.t_s), detect.t_rise)
    period = detect_stage + readout_stage
    if reset is not None:
        period += stage_duration(reset.t_dr, reset.t_rise)
    return CycleOutcome(
        eta_after_reset=eta_after,
        eta_fresh=fresh.eta,
        p_e_after_reset=dark,
        period=period,
        rate=1.0 / period,
    )

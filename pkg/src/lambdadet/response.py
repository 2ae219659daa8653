"""Continuous-wave reflection spectroscopy of the driven system.

The two-tone configuration (qubit drive at omega_d, weak probe at omega_s)
is static in the frame (omega_d, omega_s), so the reflection coefficient
comes from a direct steady-state solve:

    r = -1 + sqrt(kappa_ext) <a>_ss / alpha_in

which reduces to the one-port result r = (kappa_ext - kappa_int) / kappa
for the bare cavity on resonance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import hbar as HBAR

from .dressed import dressed_states, matching_amplitude, transition_frequency
from .dynamics import steady_state
from .errors import DipResolutionError, SteadyStateError
from .hilbert import annihilation, build_space
from .model import (
    Frame,
    collapse_operators,
    drive_noise_channels,
    hamiltonian_static,
    input_quadratures,
)
from .params import SystemParams

TWO_PI = 2.0 * math.pi
PASSIVITY_TOL = 1e-6

# weak-probe default: photon flux small against the qubit return rate so the
# |2~> population stays in the linear-response regime
WEAK_PROBE_GAMMA_FRACTION = 1e-3


def default_probe_amplitude(params: SystemParams) -> float:
    """Converged weak probe amplitude in sqrt(photons/s)."""
    rate = params.gamma if params.gamma > 0 else 1e-6 * params.kappa
    return math.sqrt(WEAK_PROBE_GAMMA_FRACTION * rate)


def signal_flux_of_dbm(p_dbm: float, omega_s: float) -> float:
    """Photon flux (photons/s) of a CW tone of given power at frequency omega_s."""
    watts = 10.0 ** ((p_dbm - 30.0) / 10.0)
    return watts / (HBAR * omega_s)


def reflection_coefficient(
    params: SystemParams,
    omega_d: float,
    rabi: float,
    omega_s: float,
    probe_amp: float | None = None,
    *,
    n_max: int = 3,
) -> complex:
    """Complex reflection coefficient of a weak CW probe at omega_s."""
    if probe_amp is None:
        probe_amp = default_probe_amplitude(params)
    if probe_amp <= 0:
        raise ValueError("probe_amp must be > 0")
    space = build_space(n_max)
    frame = Frame(omega_d, omega_s)
    h = hamiltonian_static(params, frame, rabi, omega_d, space=space).matrix
    p_quad, _ = input_quadratures(space)
    h_total = h + math.sqrt(params.kappa_ext) * probe_amp * p_quad
    collapses = collapse_operators(params, space) + drive_noise_channels(params, space, rabi)
    rho = steady_state(h_total, collapses, frame=frame, space=space)
    a_mean = complex(np.trace(annihilation(space) @ rho.matrix))
    return -1.0 + math.sqrt(params.kappa_ext) * a_mean / probe_amp


def probe_converged(
    params: SystemParams,
    omega_d: float,
    rabi: float,
    omega_s: float,
    probe_amp: float,
    tol: float = 1e-3,
    **kw,
) -> bool:
    """True when halving the probe amplitude moves |r| by less than tol."""
    r_full = reflection_coefficient(params, omega_d, rabi, omega_s, probe_amp, **kw)
    r_half = reflection_coefficient(params, omega_d, rabi, omega_s, probe_amp / 2.0, **kw)
    return abs(abs(r_full) - abs(r_half)) < tol


@dataclass
class ReflectionMap:
    """Reflection coefficient over a drive power x signal frequency grid."""

    p_d_dbm: np.ndarray
    omega_s: np.ndarray
    r: np.ndarray  # shape (len(p_d_dbm), len(omega_s))
    probe_amp: float
    params: SystemParams
    omega_d: float
    flags: list

    def validate_passivity(self, tol: float = PASSIVITY_TOL):
        worst = float(np.max(np.abs(self.r)))
        if worst > 1.0 + tol:
            raise ValueError(f"passivity violated: max |r| = {worst}")


def _map_point(args):
    params, omega_d, rabi, omega_s, probe_amp, n_max = args
    try:
        return reflection_coefficient(
            params, omega_d, rabi, omega_s, probe_amp, n_max=n_max
        ), ""
    except SteadyStateError as exc:
        return complex(np.nan, np.nan), str(exc)


def dip_map(
    params: SystemParams,
    omega_d: float,
    power_grid_dbm,
    freq_grid,
    probe_amp: float | None = None,
    *,
    n_max: int = 3,
    workers: int = 1,
) -> ReflectionMap:
    """|r| map over the (P_d, omega_s) grid; per-point failures are recorded."""
    power_grid_dbm = np.asarray(power_grid_dbm, dtype=float)
    freq_grid = np.asarray(freq_grid, dtype=float)
    if np.any(np.diff(power_grid_dbm) <= 0) or np.any(np.diff(freq_grid) <= 0):
        raise ValueError("grids must be strictly increasing")
    if probe_amp is None:
        probe_amp = default_probe_amplitude(params)

    tasks = []
    for p_dbm in power_grid_dbm:
        rabi = params.rabi_of_dbm(p_dbm)
        for omega_s in freq_grid:
            tasks.append((params, omega_d, rabi, omega_s, probe_amp, n_max))

    from .sweep import parallel_map

    results = parallel_map(_map_point, tasks, workers)
    r = np.empty((len(power_grid_dbm), len(freq_grid)), dtype=complex)
    flags = []
    for k, (value, flag) in enumerate(results):
        i, j = divmod(k, len(freq_grid))
        r[i, j] = value
        if flag:
            flags.append((i, j, flag))
    out = ReflectionMap(power_grid_dbm, freq_grid, r, probe_amp, params, omega_d, flags)
    out.validate_passivity()
    return out


@dataclass(frozen=True)
class MatchingPoint:
    p_d_dbm: float
    omega_s: float
    min_abs_r: float
    on_boundary: bool


def _parabolic_refine(xs: np.ndarray, ys: np.ndarray, i: int):
    """Vertex of the parabola through (x, y) at i-1, i, i+1; falls back to i."""
    if i == 0 or i == len(xs) - 1:
        return xs[i], ys[i]
    x0, x1, x2 = xs[i - 1], xs[i], xs[i + 1]
    y0, y1, y2 = ys[i - 1], ys[i], ys[i + 1]
    denom = (y0 - 2.0 * y1 + y2)
    if denom <= 0:
        return xs[i], ys[i]
    # uniform-spacing vertex formula is exact enough for near-uniform grids
    shift = 0.5 * (y0 - y2) / denom
    shift = float(np.clip(shift, -1.0, 1.0))
    x_v = x1 + shift * 0.5 * (x2 - x0)
    y_v = y1 - 0.125 * (y0 - y2) ** 2 / denom
    return x_v, y_v


def find_matching_point(rmap: ReflectionMap) -> MatchingPoint:
    """Grid argmin of |r| with local quadratic refinement of log|r| per axis."""
    mag = np.abs(rmap.r)
    if mag.size == 0 or np.all(np.isnan(mag)):
        raise ValueError("reflection map is empty")
    flat = np.nanargmin(mag)
    i, j = divmod(int(flat), mag.shape[1])
    on_boundary = i in (0, mag.shape[0] - 1) or j in (0, mag.shape[1] - 1)

    log_mag = np.log(np.maximum(mag, 1e-300))
    p_ref, logr_p = _parabolic_refine(rmap.p_d_dbm, log_mag[:, j], i)
    f_ref, logr_f = _parabolic_refine(rmap.omega_s, log_mag[i, :], j)
    refined = min(math.exp(logr_p), math.exp(logr_f), float(mag[i, j]))
    return MatchingPoint(float(p_ref), float(f_ref), refined, on_boundary)


@dataclass(frozen=True)
class PdiffResult:
    """Impedance-matching dip powers of the two Raman branches."""

    p_dip3_dbm: float
    p_dip4_dbm: float
    p_diff_db: float
    omega_dip3: float
    omega_dip4: float
    min_abs_r3: float
    min_abs_r4: float


def _branch_dip(
    params, omega_d, branch, power_grid_dbm, signal_power_dbm, n_max, freq_halfspan, freq_points
):
    """2D minimum of |r| around one Raman branch, refined along the power axis."""
    upper = 4 if branch == 4 else 3
    best = np.full(len(power_grid_dbm), np.inf)
    best_freq = np.zeros(len(power_grid_dbm))
    for i, p_dbm in enumerate(power_grid_dbm):
        rabi = params.rabi_of_dbm(p_dbm)
        ladder = dressed_states(params, omega_d, rabi)
        center = transition_frequency(ladder, 1, upper)
        freqs = np.linspace(center - freq_halfspan, center + freq_halfspan, freq_points)
        mags = []
        for omega_s in freqs:
            amp = math.sqrt(signal_flux_of_dbm(signal_power_dbm, omega_s))
            r = reflection_coefficient(params, omega_d, rabi, omega_s, amp, n_max=n_max)
            mags.append(abs(r))
        mags = np.array(mags)
        jmin = int(np.argmin(mags))
        f_ref, log_min = _parabolic_refine(freqs, np.log(np.maximum(mags, 1e-300)), jmin)
        best[i] = math.exp(log_min)
        best_freq[i] = f_ref
    imin = int(np.argmin(best))
    if imin in (0, len(power_grid_dbm) - 1):
        raise DipResolutionError(
            f"branch |{upper}~> dip sits on the power-grid boundary",
            scan=(power_grid_dbm, best),
        )
    p_ref, log_r = _parabolic_refine(power_grid_dbm, np.log(best), imin)
    return float(p_ref), float(best_freq[imin]), math.exp(log_r)


def pdiff_spectrum(
    params: SystemParams,
    omega_d: float | None = None,
    signal_power_dbm: float = -145.65,
    *,
    power_halfspan_db: float = 6.0,
    power_points: int = 25,
    freq_halfspan: float = TWO_PI * 10e6,
    freq_points: int = 21,
    n_max: int = 3,
) -> PdiffResult:
    """Drive-power separation of the two impedance-matching dips.

    The probe is a CW tone of absolute power ``signal_power_dbm`` (at the
    chip). Each branch is minimized over a (P_d, omega_s) window centered on
    its dressed transition; P_diff is the dip separation along P_d in dB,
    which only involves drive-amplitude ratios and therefore does not depend
    on the dBm calibration constant.
    """
    if omega_d is None:
        omega_d = params.omega_ge - TWO_PI * 46e6
    params.check_nesting(omega_d)
    rabi_star = matching_amplitude(params, omega_d)
    anchor_dbm = 20.0 * math.log10(rabi_star / params.require_calibration())
    power_grid = np.linspace(
        anchor_dbm - power_halfspan_db, anchor_dbm + power_halfspan_db, power_points
    )

    p3, f3, r3 = _branch_dip(
        params, omega_d, 3, power_grid, float(signal_power_dbm), n_max, freq_halfspan, freq_points
    )
    p4, f4, r4 = _branch_dip(
        params, omega_d, 4, power_grid, float(signal_power_dbm), n_max, freq_halfspan, freq_points
    )
    return PdiffResult(p3, p4, abs(p3 - p4), f3, f4, r3, r4)


def calibration_params(params: SystemParams, gamma_calibration: float) -> SystemParams:
    """Parameter set of the CW input-power calibration.

    The calibration is characterized by the device constants plus the qubit
    decay rate and the external-coupling ratio only, so the time-gated
    protocol extras (initialization floor, drive-line noise) are zeroed.
    """
    return replace(
        params,
        gamma=gamma_calibration,
        init_excited_pop=0.0,
        drive_noise_per_rabi2=0.0,
        drive_dephasing_per_rabi2=0.0,
    )


@dataclass(frozen=True)
class SignalPowerCalibration:
    p_s_dbm: float
    p_diff_db: float
    residual_db: float


def calibrate_signal_power(
    params: SystemParams,
    omega_d: float | None = None,
    target_db: float = 6.0,
    tol_db: float = 0.05,
    bracket_dbm=(-150.0, -141.0),
    **pdiff_kw,
) -> SignalPowerCalibration:
    """Signal power whose dip separation reproduces the target P_diff.

    Bisection on the signal power in dBm; P_diff grows monotonically with
    signal power, so the bracket just needs to straddle the target. The
    per-branch power window is widened so the dips stay interior across the
    whole bracket.
    """
    lo, hi = bracket_dbm
    pdiff_kw.setdefault("power_halfspan_db", 8.0)
    pdiff_kw.setdefault("power_points", 33)

    def value(p_s):
        return pdiff_spectrum(params, omega_d, p_s, **pdiff_kw).p_diff_db

    f_lo, f_hi = value(lo) - target_db, value(hi) - target_db
    if f_lo > 0 or f_hi < 0:
        raise DipResolutionError(
            f"P_diff bracket does not straddle {target_db} dB: "
            f"[{f_lo + target_db:.2f}, {f_hi + target_db:.2f}] dB"
        )
    while hi - lo > 0.02:
        mid = 0.5 * (lo + hi)
        f_mid = value(mid) - target_db
        if abs(f_mid) < tol_db:
            return SignalPowerCalibration(mid, f_mid + target_db, f_mid)
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    f_mid = value(mid) - target_db
    return SignalPowerCalibration(mid, f_mid + target_db, f_mid)

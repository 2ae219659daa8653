"""Pulse envelopes and timed schedules for the detection and reset protocols.

Envelope widths follow the experiment's conventions: a Gaussian signal pulse
is specified by its FWHM t_s in voltage amplitude, flat-top drive edges are
half-Gaussians with FWHM 2*t_rise, and Gaussians are truncated at +-4 sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Frame
from .params import SystemParams

SIGMA_PER_FWHM = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
GAUSS_TRUNC_SIGMAS = 4.0

KIND_GAUSSIAN = "gaussian"
KIND_FLAT_TOP = "flat_top_gaussian_edges"
KIND_RECT = "rect"
KIND_INSTANT_PI = "instant_pi"

ROLE_DRIVE = "drive"
ROLE_SIGNAL = "signal"
ROLE_RESET = "reset"
ROLE_PI = "pi"
ROLE_READOUT_MARKER = "readout_marker"

# drive plateau covering rule and edge smoothing used throughout the protocol
T_RISE_DEFAULT = 15e-9
DRIVE_LENGTH_SLOPE = 1.5
DRIVE_LENGTH_OFFSET = 50e-9


def auto_drive_length(t_s: float) -> float:
    """Drive plateau duration that covers a signal pulse of FWHM t_s."""
    return DRIVE_LENGTH_SLOPE * t_s + DRIVE_LENGTH_OFFSET


@dataclass(frozen=True)
class PulseEnvelope:
    """One timed envelope.

    ``width`` is the FWHM for gaussian kind, the plateau duration for
    flat-top, and the full duration for rect. ``amplitude`` is a peak Rabi
    amplitude (rad/s) for qubit drives or sqrt(photons/s) for resonator
    inputs. ``carrier`` is the tone's angular frequency.
    """

    kind: str
    center: float
    width: float
    edge_fwhm: float = 0.0
    amplitude: float = 0.0
    carrier: float = 0.0

    def __post_init__(self):
        if self.kind not in (KIND_GAUSSIAN, KIND_FLAT_TOP, KIND_RECT, KIND_INSTANT_PI):
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if self.width < 0 or self.edge_fwhm < 0:
            raise ValueError("durations must be >= 0")
        if self.kind == KIND_GAUSSIAN and self.width <= 0:
            raise ValueError("gaussian envelope needs a positive FWHM")

    @property
    def sigma(self) -> float:
        """Gaussian sigma of the body (gaussian) or the edges (flat-top)."""
        if self.kind == KIND_GAUSSIAN:
            return self.width * SIGMA_PER_FWHM
        return self.edge_fwhm * SIGMA_PER_FWHM

    def support(self) -> tuple[float, float]:
        """Interval outside which the envelope is identically zero."""
        if self.kind == KIND_GAUSSIAN:
            half = GAUSS_TRUNC_SIGMAS * self.sigma
        elif self.kind == KIND_FLAT_TOP:
            half = self.width / 2.0 + GAUSS_TRUNC_SIGMAS * self.sigma
        elif self.kind == KIND_RECT:
            half = self.width / 2.0
        else:
            half = 0.0
        return self.center - half, self.center + half

    def value(self, t: float) -> float:
        """Real envelope value at time t (scalar)."""
        dt = t - self.center
        if self.kind == KIND_GAUSSIAN:
            s = self.sigma
            if abs(dt) > GAUSS_TRUNC_SIGMAS * s:
                return 0.0
            return self.amplitude * math.exp(-0.5 * (dt / s) ** 2)
        if self.kind == KIND_FLAT_TOP:
            half = self.width / 2.0
            edge = abs(dt) - half
            if edge <= 0.0:
                return self.amplitude
            s = self.sigma
            if s == 0.0 or edge > GAUSS_TRUNC_SIGMAS * s:
                return 0.0
            return self.amplitude * math.exp(-0.5 * (edge / s) ** 2)
        if self.kind == KIND_RECT:
            return self.amplitude if abs(dt) <= self.width / 2.0 else 0.0
        return 0.0

    def values(self, t: np.ndarray) -> np.ndarray:
        return np.array([self.value(ti) for ti in np.atleast_1d(t)])

    def photon_content(self) -> float:
        """Analytic integral of |alpha(t)|^2 over the envelope support."""
        s = self.sigma
        a2 = self.amplitude**2
        if self.kind == KIND_GAUSSIAN:
            # |alpha|^2 is Gaussian with variance sigma^2/2, truncated at 4 sigma
            # of the amplitude profile
            return a2 * s * math.sqrt(math.pi) * math.erf(GAUSS_TRUNC_SIGMAS)
        if self.kind == KIND_FLAT_TOP:
            edges = a2 * s * math.sqrt(math.pi) * math.erf(GAUSS_TRUNC_SIGMAS)
            return a2 * self.width + edges
        if self.kind == KIND_RECT:
            return a2 * self.width
        return 0.0


def gaussian_signal(nbar: float, t_s: float, center: float, carrier: float) -> PulseEnvelope:
    """Gaussian input pulse whose integrated photon flux equals nbar."""
    if t_s <= 0:
        raise ValueError("t_s must be > 0")
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    sigma = t_s * SIGMA_PER_FWHM
    norm = sigma * math.sqrt(math.pi) * math.erf(GAUSS_TRUNC_SIGMAS)
    amp = math.sqrt(nbar / norm)
    return PulseEnvelope(KIND_GAUSSIAN, center, t_s, 0.0, amp, carrier)


def flat_top_drive(
    rabi: float, plateau: float, center: float, carrier: float, t_rise: float = T_RISE_DEFAULT
) -> PulseEnvelope:
    return PulseEnvelope(KIND_FLAT_TOP, center, plateau, 2.0 * t_rise, rabi, carrier)


def flat_top_input(
    nbar: float, plateau: float, center: float, carrier: float, t_rise: float = T_RISE_DEFAULT
) -> PulseEnvelope:
    """Flat-top resonator input carrying nbar photons in total."""
    sigma = 2.0 * t_rise * SIGMA_PER_FWHM
    norm = plateau + sigma * math.sqrt(math.pi) * math.erf(GAUSS_TRUNC_SIGMAS)
    amp = math.sqrt(nbar / norm)
    return PulseEnvelope(KIND_FLAT_TOP, center, plateau, 2.0 * t_rise, amp, carrier)


def instant_pi(center: float) -> PulseEnvelope:
    return PulseEnvelope(KIND_INSTANT_PI, center, 0.0)


def readout_marker(time: float, carrier: float = 0.0) -> PulseEnvelope:
    return PulseEnvelope(KIND_RECT, time, 0.0, 0.0, 0.0, carrier)


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered (role, envelope) pairs with the frame they are expressed in."""

    entries: tuple[tuple[str, PulseEnvelope], ...]
    frame: Frame
    duration: float

    def envelopes(self, role: str):
        return [env for r, env in self.entries if r == role]

    def marker_times(self):
        return [env.center for r, env in self.entries if r == ROLE_READOUT_MARKER]

    def pi_times(self):
        return [env.center for r, env in self.entries if r == ROLE_PI]


def detection_schedule(
    params: SystemParams,
    *,
    rabi: float,
    omega_d: float,
    omega_s: float,
    t_s: float,
    nbar_s: float,
    t_rise: float = T_RISE_DEFAULT,
    t_d: float | None = None,
    start: float = 0.0,
) -> PulseSchedule:
    """Drive + signal pulse pair of the single-photon detection stage.

    The drive plateau (duration t_d = 1.5 t_s + 50 ns unless overridden)
    is centered on the Gaussian signal pulse; the readout marker sits at
    t_d/2 + t_rise after the common center.
    """
    if t_s <= 0:
        raise ValueError("t_s must be > 0")
    if nbar_s < 0:
        raise ValueError("nbar_s must be >= 0")
    if t_d is None:
        t_d = auto_drive_length(t_s)
    edge_sigma = 2.0 * t_rise * SIGMA_PER_FWHM
    lead = GAUSS_TRUNC_SIGMAS * edge_sigma
    center = start + lead + t_d / 2.0
    marker_t = center + t_d / 2.0 + t_rise

    entries = [
        (ROLE_DRIVE, flat_top_drive(rabi, t_d, center, omega_d, t_rise)),
        (ROLE_SIGNAL, gaussian_signal(nbar_s, t_s, center, omega_s)),
        (ROLE_READOUT_MARKER, readout_marker(marker_t, params.omega_r - 2.0 * params.chi)),
    ]
    duration = max([marker_t] + [env.support()[1] for _, env in entries])
    return PulseSchedule(tuple(entries), Frame(omega_d, omega_s), duration)


def reset_schedule(
    params: SystemParams,
    *,
    rabi_dr: float,
    omega_d: float,
    omega_rst: float,
    nbar_rst: float,
    t_dr: float,
    t_rise: float = T_RISE_DEFAULT,
    with_initial_pi: bool = True,
    start: float = 0.0,
    resonator_ref: float | None = None,
) -> PulseSchedule:
    """Reset stage: optional instantaneous pi pulse, then drive + reset tone.

    The reset tone is a flat-top co-terminated with the drive and carries
    nbar_rst photons in total.
    """
    if t_dr <= 0:
        raise ValueError("t_dr must be > 0")
    edge_sigma = 2.0 * t_rise * SIGMA_PER_FWHM
    lead = GAUSS_TRUNC_SIGMAS * edge_sigma
    center = start + lead + t_dr / 2.0
    marker_t = center + t_dr / 2.0 + t_rise

    entries = []
    if with_initial_pi:
        entries.append((ROLE_PI, instant_pi(start)))
    entries.append((ROLE_DRIVE, flat_top_drive(rabi_dr, t_dr, center, omega_d, t_rise)))
    if nbar_rst > 0:
        entries.append(
            (ROLE_RESET, flat_top_input(nbar_rst, t_dr, center, omega_rst, t_rise))
        )
    entries.append(
        (ROLE_READOUT_MARKER, readout_marker(marker_t, params.omega_r - 2.0 * params.chi))
    )
    ref = omega_rst if resonator_ref is None else resonator_ref
    duration = max([marker_t] + [env.support()[1] for _, env in entries])
    return PulseSchedule(tuple(entries), Frame(omega_d, ref), duration)


def stage_duration(t_plateau: float, t_rise: float = T_RISE_DEFAULT) -> float:
    """Nominal stage duration bookkeeping: plateau plus one t_rise per edge."""
    return t_plateau + 2.0 * t_rise

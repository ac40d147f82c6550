"""Pulse protocols on the m_S = 0 nuclear manifold: ODNMR, Rabi, Ramsey.

States are 3x3 density matrices over the nuclear sublevels ordered
{|+1>, |0>, |-1>}.  Radio-frequency drives are treated in the rotating-wave
approximation as two-level rotations on whichever transition (f1 or f2) lies
nearer the drive frequency -- the ~300 kHz separation of the two transitions
dwarfs the few-kHz Rabi rates used here, so the pulses are transition
selective.  Dephasing enters as exponential damping of coherences: T2* on
free evolution, a separate envelope constant on driven evolution.

All drive evolution is expressed in the rotating frame of the pulse; the
populations that feed the optical signal are frame independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import effective
from .spinmodel import SpinParameters

LEVEL_M_I = (1, 0, -1)  # state ordering of the 3x3 nuclear density matrix
_UPPER = 1  # |0,0> is the upper level of both transitions for Q < 0

RAMSEY_MAX_DETUNING_MHZ = 0.050


class DriveAmbiguityError(ValueError):
    """Drive frequency exactly equidistant from both transitions."""


class InvalidStateError(ValueError):
    """Density matrix violates Hermiticity, unit trace or positivity."""


@dataclass(frozen=True)
class DecoherenceParams:
    """Phenomenological dephasing times (us); use math.inf to disable."""

    t2_star_us: float = 600.0
    t_rabi_us: float = 1000.0

    def __post_init__(self):
        if not self.t2_star_us > 0 or not self.t_rabi_us > 0:
            raise ValueError("decoherence times must be positive")


@dataclass(frozen=True)
class PulseSegment:
    """One timed segment of a sequence: an RF drive or free evolution."""

    kind: str  # "rf_drive" | "free_evolution"
    duration_us: float
    rf_frequency_mhz: float = 0.0
    rabi_frequency_khz: float = 0.0
    phase_rad: float = 0.0

    def __post_init__(self):
        if self.kind not in ("rf_drive", "free_evolution"):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if self.duration_us < 0:
            raise ValueError("duration must be >= 0")
        if self.rabi_frequency_khz < 0:
            raise ValueError("rabi frequency must be >= 0")


@dataclass
class Trace:
    """Signal versus abscissa for one simulated protocol."""

    abscissa: np.ndarray
    signal: np.ndarray
    protocol: str
    abscissa_name: str
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        if self.abscissa.shape != self.signal.shape:
            raise ValueError("abscissa and signal must have equal length")
        if not np.all(np.isfinite(self.signal)):
            raise ValueError("signal contains non-finite values")

    def contrast(self) -> float:
        """(max - min)/max of the signal."""
        top = float(np.max(self.signal))
        return (top - float(np.min(self.signal))) / top


def state_from_populations(populations) -> np.ndarray:
    """Diagonal nuclear density matrix from populations over {+1, 0, -1}."""
    p = np.asarray(populations, dtype=float)
    if p.shape != (3,) or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise InvalidStateError(f"populations must be a normalized length-3 "
                                f"vector, got {populations!r}")
    return np.diag(np.clip(p, 0.0, None)).astype(complex)


def check_state(rho: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (3, 3):
        raise InvalidStateError("nuclear state must be a 3x3 density matrix")
    if np.abs(rho - rho.conj().T).max() > atol:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > atol:
        raise InvalidStateError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise InvalidStateError("density matrix has a negative eigenvalue")
    return rho


def populations(rho: np.ndarray) -> np.ndarray:
    return np.real(np.diag(rho)).copy()


def _damp_off_diagonal(rho: np.ndarray, factor: float) -> np.ndarray:
    damped = rho * factor
    np.fill_diagonal(damped, np.diag(rho))
    return damped


def evolve_free(rho: np.ndarray, params: SpinParameters, b_gauss: float,
                t_us: float, dec: DecoherenceParams) -> np.ndarray:
    """Free evolution under the effective nuclear Hamiltonian.

    Populations are untouched (the Hamiltonian is diagonal in this basis);
    each coherence acquires its transition phase exp(-i 2 pi dE t) and decays
    by exp(-t/T2*).
    """
    rho = check_state(rho)
    energies = np.array(effective.nuclear_level_energies(params, b_gauss))
    phases = np.exp(-2j * np.pi * energies * t_us)
    evolved = np.outer(phases, phases.conj()) * rho
    return _damp_off_diagonal(evolved, math.exp(-t_us / dec.t2_star_us))


def _select_transition(params: SpinParameters, b_gauss: float,
                       rf_frequency_mhz: float):
    """(lower-level index, detuning, transition name) for the nearer transition."""
    pair = effective.transition_frequencies(params, b_gauss)
    d1 = abs(rf_frequency_mhz - pair.f1_mhz)
    d2 = abs(rf_frequency_mhz - pair.f2_mhz)
    if d1 == d2:
        raise DriveAmbiguityError(
            f"rf frequency {rf_frequency_mhz:g} MHz is equidistant from "
            f"f1 = {pair.f1_mhz:.6f} and f2 = {pair.f2_mhz:.6f} MHz")
    if d1 < d2:
        return 0, rf_frequency_mhz - pair.f1_mhz, "f1"
    return 2, rf_frequency_mhz - pair.f2_mhz, "f2"


def _drive_frame_hamiltonian(lower: int, delta_mhz: float, omega_mhz: float,
                             phase_rad: float) -> np.ndarray:
    h = np.zeros((3, 3), dtype=complex)
    h[_UPPER, _UPPER] = -delta_mhz
    coupling = 0.5 * omega_mhz * np.exp(1j * phase_rad)
    h[_UPPER, lower] = coupling
    h[lower, _UPPER] = np.conj(coupling)
    return h


def _evolve_dephased(rho: np.ndarray, h_mhz: np.ndarray, t_us: float,
                     damping_time_us: float) -> np.ndarray:
    """Propagate under a static Hamiltonian, damping coherences between its
    eigenstates by exp(-t/damping_time)."""
    w, v = np.linalg.eigh(h_mhz)
    rho_eig = v.conj().T @ rho @ v
    phases = np.exp(-2j * np.pi * w * t_us)
    rho_eig = np.outer(phases, phases.conj()) * rho_eig
    rho_eig = _damp_off_diagonal(rho_eig, math.exp(-t_us / damping_time_us))
    return v @ rho_eig @ v.conj().T


def evolve_drive(rho: np.ndarray, params: SpinParameters, b_gauss: float,
                 segment: PulseSegment, dec: DecoherenceParams) -> np.ndarray:
    """Apply one RF pulse in the rotating-wave approximation.

    The drive couples the two levels of the transition nearest its frequency
    with on-resonance Rabi rate equal to the programmed rabi_frequency (a pi
    pulse lasts 1/(2 Omega)); off resonance the rotation proceeds at the
    generalized rate sqrt(Omega^2 + delta^2) with transfer ceiling
    Omega^2/(Omega^2 + delta^2).  The third level only accrues frame phase.
    The returned state is expressed in the drive's rotating frame, which
    leaves populations unaffected.
    """
    if segment.kind != "rf_drive":
        raise ValueError("evolve_drive requires an rf_drive segment")
    rho = check_state(rho)
    lower, delta, _ = _select_transition(params, b_gauss,
                                         segment.rf_frequency_mhz)
    omega_mhz = segment.rabi_frequency_khz * 1e-3
    h = _drive_frame_hamiltonian(lower, delta, omega_mhz, segment.phase_rad)
    return _evolve_dephased(rho, h, segment.duration_us, dec.t_rabi_us)


def _ideal_rotation(lower: int, angle_rad: float, phase_rad: float) -> np.ndarray:
    """Instantaneous rotation on the (lower, upper) pair about the drive axis."""
    u = np.eye(3, dtype=complex)
    half = 0.5 * angle_rad
    u[lower, lower] = u[_UPPER, _UPPER] = math.cos(half)
    u[_UPPER, lower] = -1j * math.sin(half) * np.exp(1j * phase_rad)
    u[lower, _UPPER] = -1j * math.sin(half) * np.exp(-1j * phase_rad)
    return u


def _signal(readout, rho: np.ndarray, b_gauss: float) -> float:
    return float(readout.signal_from_populations(populations(rho), b_gauss))


def simulate_rabi(params: SpinParameters, b_gauss: float, rf_frequency_mhz: float,
                  rabi_frequency_khz: float, durations_us, readout,
                  dec: DecoherenceParams = DecoherenceParams()) -> Trace:
    """Optically detected Rabi oscillations: drive pulses of swept duration.

    Each point starts from the readout model's polarized state, applies one
    drive pulse and maps the resulting populations to a fluorescence signal.
    """
    durations_us = np.asarray(durations_us, dtype=float)
    rho0 = state_from_populations(readout.polarization)
    signal = np.empty_like(durations_us)
    for i, duration in enumerate(durations_us):
        segment = PulseSegment(kind="rf_drive", duration_us=float(duration),
                               rf_frequency_mhz=rf_frequency_mhz,
                               rabi_frequency_khz=rabi_frequency_khz)
        signal[i] = _signal(readout, evolve_drive(rho0, params, b_gauss,
                                                  segment, dec), b_gauss)
    return Trace(abscissa=durations_us, signal=signal, protocol="rabi",
                 abscissa_name="duration_us",
                 params={"b_gauss": b_gauss,
                         "rf_frequency_mhz": rf_frequency_mhz,
                         "rabi_frequency_khz": rabi_frequency_khz,
                         "t2_star_us": dec.t2_star_us,
                         "t_rabi_us": dec.t_rabi_us})


def simulate_ramsey(params: SpinParameters, b_gauss: float, rf_frequency_mhz: float,
                    taus_us, pi2_duration_us: float = 0.0, readout=None,
                    dec: DecoherenceParams = DecoherenceParams(),
                    prepare: str = "auto") -> Trace:
    """pi/2 - tau - pi/2 interferometry; fringes oscillate at the detuning.

    pi2_duration_us = 0 uses ideal instantaneous rotations; a positive value
    evolves finite pulses with the Rabi rate implied by the duration
    (Omega = 1/(4 t_pi/2)).  prepare="auto" inserts an ideal population swap
    on the f1 pair before the sequence when the drive addresses f2, mirroring
    how the |0,0> state is prepared experimentally; "none" skips it.
    """
    pair = effective.transition_frequencies(params, b_gauss)
    lower, delta, transition = _select_transition(params, b_gauss,
                                                  rf_frequency_mhz)
    if min(abs(rf_frequency_mhz - pair.f1_mhz),
           abs(rf_frequency_mhz - pair.f2_mhz)) > RAMSEY_MAX_DETUNING_MHZ:
        raise ValueError(
            f"rf frequency must lie within {RAMSEY_MAX_DETUNING_MHZ * 1e3:.0f} kHz "
            f"of f1 or f2 (got {rf_frequency_mhz:g} MHz; f1 = {pair.f1_mhz:.6f}, "
            f"f2 = {pair.f2_mhz:.6f})")
    if prepare not in ("auto", "none"):
        raise ValueError("prepare must be 'auto' or 'none'")

    taus_us = np.asarray(taus_us, dtype=float)
    rho0 = state_from_populations(readout.polarization)
    if prepare == "auto" and transition == "f2":
        swap = _ideal_rotation(0, math.pi, 0.0)
        rho0 = swap @ rho0 @ swap.conj().T

    # Free evolution between the pulses, in the drive's rotating frame: only
    # the driven pair's splitting survives, as the detuning.
    h_frame = np.zeros((3, 3), dtype=complex)
    h_frame[_UPPER, _UPPER] = -delta

    if pi2_duration_us > 0:
        omega_khz = 1e3 / (4.0 * pi2_duration_us)
        segment = PulseSegment(kind="rf_drive", duration_us=pi2_duration_us,
                               rf_frequency_mhz=rf_frequency_mhz,
                               rabi_frequency_khz=omega_khz)

        def pulse(rho):
            return evolve_drive(rho, params, b_gauss, segment, dec)
    else:
        u = _ideal_rotation(lower, 0.5 * math.pi, 0.0)

        def pulse(rho):
            return u @ rho @ u.conj().T

    signal = np.empty_like(taus_us)
    for i, tau in enumerate(taus_us):
        rho = pulse(rho0)
        rho = _evolve_dephased(rho, h_frame, float(tau), dec.t2_star_us)
        rho = pulse(rho)
        signal[i] = _signal(readout, rho, b_gauss)
    return Trace(abscissa=taus_us, signal=signal, protocol="ramsey",
                 abscissa_name="tau_us",
                 params={"b_gauss": b_gauss,
                         "rf_frequency_mhz": rf_frequency_mhz,
                         "transition": transition,
                         "detuning_mhz": delta,
                         "pi2_duration_us": pi2_duration_us,
                         "t2_star_us": dec.t2_star_us,
                         "t_rabi_us": dec.t_rabi_us})


def simulate_odnmr(params: SpinParameters, b_gauss: float, rf_grid_mhz,
                   pulse_duration_us: float, rabi_frequency_khz: float, readout,
                   dec: DecoherenceParams = DecoherenceParams()) -> Trace:
    """Swept-frequency spectrum: one fixed-length drive pulse per grid point.

    Resonant dips appear where the drive frequency crosses a transition whose
    levels hold unequal population; with full |+1> polarization only the f1
    dip shows.
    """
    rf_grid_mhz = np.asarray(rf_grid_mhz, dtype=float)
    rho0 = state_from_populations(readout.polarization)
    signal = np.empty_like(rf_grid_mhz)
    for i, rf in enumerate(rf_grid_mhz):
        segment = PulseSegment(kind="rf_drive", duration_us=pulse_duration_us,
                               rf_frequency_mhz=float(rf),
                               rabi_frequency_khz=rabi_frequency_khz)
        signal[i] = _signal(readout, evolve_drive(rho0, params, b_gauss,
                                                  segment, dec), b_gauss)
    return Trace(abscissa=rf_grid_mhz, signal=signal, protocol="odnmr",
                 abscissa_name="rf_mhz",
                 params={"b_gauss": b_gauss,
                         "pulse_duration_us": pulse_duration_us,
                         "rabi_frequency_khz": rabi_frequency_khz,
                         "t2_star_us": dec.t2_star_us,
                         "t_rabi_us": dec.t_rabi_us})

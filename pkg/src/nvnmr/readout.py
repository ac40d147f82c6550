"""Nuclear-spin-dependent fluorescence and optical pumping near the ESLAC.

Two tiers:

* A parametric readout model anchored to measured numbers: per-nuclear-state
  brightness derived from a Lorentzian contrast-vs-field curve, used for all
  signal synthesis in the pulse protocols.
* An exploratory classical rate model of the excited-state level anticrossing
  (ESLAC) mechanism: spin-conserving optical cycling plus electron-nuclear
  flip-flop mixing in the excited state, which funnels population into
  |0,+1> and makes the fluorescence depend on the nuclear state.  None of its
  rate constants are pinned by the measurements this package models; the
  defaults are plausible NV ensemble values and are flagged as such in the
  configuration echo.

Level layout of the rate model (21 classical populations): 9 ground states in
the product-basis order of `spinmodel`, 9 excited states in the same order,
then 3 singlet-shelf states resolved by nuclear projection so that optical
cycling conserves m_I exactly unless a flip-flop channel acts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spinmodel
from .pulses import Trace
from .spinmodel import GAMMA_E_MHZ_PER_G, GAMMA_N_MHZ_PER_G, SpinParameters

N_GROUND = 9
N_EXCITED = 9
N_SINGLET = 3
N_LEVELS = N_GROUND + N_EXCITED + N_SINGLET

STATIONARY_TOL_PER_US = 1e-12
HORIZON_US_DEFAULT = 20000.0


class ReadoutModeError(ValueError):
    """Operation not available in the model's current mode."""


class ConvergenceError(RuntimeError):
    """Rate-model integration did not reach a steady state."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class ESLACRateParams:
    """Rates (MHz = 1/us) and excited-state constants of the pumping model.

    All values are unconstrained configuration, not measured inputs.
    isc_rate_ms1 >= isc_rate_ms0 is enforced; strict inequality is what
    produces optical spin polarization (equality switches the nuclear-state
    contrast off, a useful null test).
    """

    pump_rate_mhz: float = 10.0
    radiative_rate_mhz: float = 65.0
    isc_rate_ms0_mhz: float = 1.0
    isc_rate_ms1_mhz: float = 55.0
    singlet_decay_rate_mhz: float = 4.0
    d_es_mhz: float = 1420.0
    a_perp_es_mhz: float = -23.0
    gamma_e_mhz_per_g: float = GAMMA_E_MHZ_PER_G
    gamma_n_mhz_per_g: float = GAMMA_N_MHZ_PER_G

    def __post_init__(self):
        for name in ("pump_rate_mhz", "radiative_rate_mhz", "isc_rate_ms0_mhz",
                     "isc_rate_ms1_mhz", "singlet_decay_rate_mhz"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.isc_rate_ms1_mhz < self.isc_rate_ms0_mhz:
            raise ValueError("isc_rate_ms1 must be >= isc_rate_ms0")

    def excited_spin_params(self) -> SpinParameters:
        """Excited-manifold constants packed for the generic Hamiltonian builder."""
        return SpinParameters(d_mhz=self.d_es_mhz,
                              gamma_e_mhz_per_g=self.gamma_e_mhz_per_g,
                              q_mhz=0.0,
                              gamma_n_mhz_per_g=self.gamma_n_mhz_per_g,
                              a_par_mhz=0.0,
                              a_perp_mhz=self.a_perp_es_mhz)


@dataclass(frozen=True)
class MixingChannel:
    """One excited-state flip-flop channel |0,m_I> <-> |-1,m_I+1>."""

    state_a: tuple[int, int]
    state_b: tuple[int, int]
    delta_mhz: float
    coupling_mhz: float
    theta_rad: float

    @property
    def mixing_weight(self) -> float:
        """sin^2(2 theta), the time-averaged population-exchange weight."""
        return math.sin(2.0 * self.theta_rad) ** 2


# The two energy-conserving flip-flop channels of the ESLAC mechanism.
FLIP_FLOP_CHANNELS = (((0, -1), (-1, 0)), ((0, 0), (-1, 1)))


def excited_state_mixing(rates: ESLACRateParams,
                         b_gauss: float) -> tuple[MixingChannel, ...]:
    """Mixing angle of each flip-flop channel from its 2x2 block.

    For block [[delta, V], [V, 0]] the angle obeys tan(2 theta) = 2V/delta;
    theta is reported in [0, pi/4], reaching pi/4 at the anticrossing
    (delta = 0) and 0 for vanishing coupling.
    """
    if b_gauss < 0:
        raise ValueError("b_gauss must be >= 0")
    h = spinmodel.build_hamiltonian(rates.excited_spin_params(), b_gauss)
    channels = []
    for (ms_a, mi_a), (ms_b, mi_b) in FLIP_FLOP_CHANNELS:
        a = spinmodel.basis_index(ms_a, mi_a)
        b = spinmodel.basis_index(ms_b, mi_b)
        delta = float(np.real(h[a, a] - h[b, b]))
        coupling = float(np.abs(h[a, b]))
        theta = 0.5 * math.atan2(2.0 * coupling, abs(delta))
        channels.append(MixingChannel(state_a=(ms_a, mi_a), state_b=(ms_b, mi_b),
                                      delta_mhz=delta, coupling_mhz=coupling,
                                      theta_rad=theta))
    return tuple(channels)


def _ground_index(ms, mi):
    return spinmodel.basis_index(ms, mi)


def _excited_index(ms, mi):
    return N_GROUND + spinmodel.basis_index(ms, mi)


def _singlet_index(mi):
    return N_GROUND + N_EXCITED + (1 - mi)


def build_rate_matrix(rates: ESLACRateParams, b_gauss: float) -> np.ndarray:
    """Population rate matrix M with dp/dt = M p; columns sum to zero.

    Flip-flop transfer between the mixed excited pairs uses the heuristic
    bidirectional rate (1/2) sin^2(2 theta) / tau_es, i.e. the time-averaged
    exchange weight over an excited-state dwell time
    tau_es = 1/(radiative + mean ISC).
    """
    m = np.zeros((N_LEVELS, N_LEVELS))

    def add(src, dst, rate):
        m[dst, src] += rate
        m[src, src] -= rate

    for ms in (1, 0, -1):
        for mi in (1, 0, -1):
            g = _ground_index(ms, mi)
            e = _excited_index(ms, mi)
            add(g, e, rates.pump_rate_mhz)
            add(e, g, rates.radiative_rate_mhz)
            isc = rates.isc_rate_ms0_mhz if ms == 0 else rates.isc_rate_ms1_mhz
            add(e, _singlet_index(mi), isc)
    for mi in (1, 0, -1):
        add(_singlet_index(mi), _ground_index(0, mi),
            rates.singlet_decay_rate_mhz)

    dwell_rate = rates.radiative_rate_mhz + 0.5 * (rates.isc_rate_ms0_mhz
                                                   + rates.isc_rate_ms1_mhz)
    for channel in excited_state_mixing(rates, b_gauss):
        transfer = 0.5 * channel.mixing_weight * dwell_rate
        a = _excited_index(*channel.state_a)
        b = _excited_index(*channel.state_b)
        add(a, b, transfer)
        add(b, a, transfer)
    return m


def initial_populations(initial_nuclear=None) -> np.ndarray:
    """All population in the m_S = 0 ground sublevels, distributed over m_I.

    initial_nuclear orders populations as (m_I=+1, 0, -1); default uniform.
    """
    if initial_nuclear is None:
        initial_nuclear = (1 / 3, 1 / 3, 1 / 3)
    weights = np.asarray(initial_nuclear, dtype=float)
    if weights.shape != (3,) or np.any(weights < 0):
        raise ValueError("initial_nuclear must be 3 non-negative weights")
    total = weights.sum()
    if total <= 0:
        raise ValueError("initial_nuclear must not be all zero")
    p = np.zeros(N_LEVELS)
    for weight, mi in zip(weights / total, (1, 0, -1)):
        p[_ground_index(0, mi)] = weight
    return p


def _integrate(matrix, p0, t_end, record=None, stationary_tol=None,
               rtol=1e-9, atol=1e-12):
    """Adaptive explicit RK3(2) on dp/dt = M p with positivity step rejection.

    Returns (p, t_reached, residual_inf).  Stops early once the stationarity
    criterion ||M p||_inf < stationary_tol is met.  `record`, when given, is
    a callable invoked as record(t, p) at every accepted step.
    """
    p = p0.copy()
    t = 0.0
    scale = max(np.abs(matrix).max(), 1e-12)
    # Cap steps well inside the explicit stability region (Gershgorin bound
    # on |lambda| from the diagonal outflows); without the cap the error
    # controller parks the step at the stability boundary, where the residual
    # stalls instead of decaying to the stationarity tolerance.
    outflow = float(np.max(-np.diag(matrix)))
    dt_max = min(1.0 / outflow, t_end) if outflow > 0 else t_end
    dt = min(0.01 / scale, dt_max) if t_end > 0 else 0.0
    k1 = matrix @ p
    residual = float(np.abs(k1).max())
    while t < t_end:
        if stationary_tol is not None and residual < stationary_tol:
            break
        dt = min(dt, t_end - t, dt_max)
        k2 = matrix @ (p + 0.5 * dt * k1)
        k3 = matrix @ (p + 0.75 * dt * k2)
        p_new = p + dt * (2.0 * k1 + 3.0 * k2 + 4.0 * k3) / 9.0
        k4 = matrix @ p_new
        err = dt * (-5.0 * k1 / 72.0 + k2 / 12.0 + k3 / 9.0 - k4 / 8.0)
        tol = atol + rtol * np.maximum(np.abs(p), np.abs(p_new))
        err_norm = float(np.max(np.abs(err) / tol))
        if err_norm <= 1.0 and p_new.min() >= -1e-12:
            t += dt
            p = p_new
            k1 = k4  # first-same-as-last
            residual = float(np.abs(k1).max())
            if record is not None:
                record(t, p)
            dt *= min(5.0, max(0.2, 0.9 * err_norm ** (-1.0 / 3.0))) \
                if err_norm > 0 else 5.0
        else:
            dt *= 0.5 if p_new.min() < -1e-12 else \
                min(1.0, max(0.2, 0.9 * err_norm ** (-1.0 / 3.0)))
            if dt <= 1e-15:
                raise ConvergenceError("step size underflow in rate integration",
                                       residual=residual)
    return p, t, residual


@dataclass(frozen=True)
class PumpResult:
    """Steady state of the pumping model under illumination."""

    populations: np.ndarray
    ground_nuclear: np.ndarray  # normalized over the ground manifold, (m_I=+1,0,-1)
    time_us: float
    residual: float

    def ground_population(self, ms: int, mi: int) -> float:
        total = self.populations[:N_GROUND].sum()
        return float(self.populations[_ground_index(ms, mi)] / total)


def pump_steady_state(rates: ESLACRateParams, b_gauss: float,
                      initial_nuclear=None,
                      horizon_us: float = HORIZON_US_DEFAULT,
                      stationary_tol: float = STATIONARY_TOL_PER_US) -> PumpResult:
    """Integrate the pumping master equation to its illuminated steady state.

    Raises ConvergenceError (with the residual attached) if ||dp/dt||_inf has
    not dropped below stationary_tol within the horizon.
    """
    matrix = build_rate_matrix(rates, b_gauss)
    p, t, residual = _integrate(matrix, initial_populations(initial_nuclear),
                                horizon_us, stationary_tol=stationary_tol)
    if residual >= stationary_tol:
        raise ConvergenceError(
            f"no steady state within {horizon_us:g} us "
            f"(residual {residual:.3e}/us, tol {stationary_tol:g}/us)",
            residual=residual)
    ground = p[:N_GROUND]
    nuclear = np.array([
        sum(ground[_ground_index(ms, mi)] for ms in (1, 0, -1))
        for mi in (1, 0, -1)])
    return PumpResult(populations=p, ground_nuclear=nuclear / nuclear.sum(),
                      time_us=t, residual=residual)


def emission_rate(rates: ESLACRateParams, p: np.ndarray) -> float:
    """Instantaneous photon emission rate (photons/us, unit efficiency)."""
    return float(rates.radiative_rate_mhz * p[N_GROUND:N_GROUND + N_EXCITED].sum())


def fluorescence_trace(rates: ESLACRateParams, b_gauss: float,
                       initial_nuclear, t_grid_us) -> Trace:
    """Photon emission rate versus time during a pump pulse."""
    t_grid_us = np.asarray(t_grid_us, dtype=float)
    if np.any(np.diff(t_grid_us) <= 0) or t_grid_us[0] < 0:
        raise ValueError("t_grid_us must be non-negative and increasing")
    matrix = build_rate_matrix(rates, b_gauss)
    p = initial_populations(initial_nuclear)
    signal = np.empty_like(t_grid_us)
    t_prev = 0.0
    for i, t_point in enumerate(t_grid_us):
        if t_point > t_prev:
            p, _, _ = _integrate(matrix, p, t_point - t_prev)
            t_prev = t_point
        signal[i] = emission_rate(rates, p)
    return Trace(abscissa=t_grid_us, signal=signal, protocol="fluorescence",
                 abscissa_name="time_us",
                 params={"b_gauss": b_gauss,
                         "initial_nuclear": list(np.asarray(initial_nuclear,
                                                            dtype=float))})


def windowed_signal(rates: ESLACRateParams, b_gauss: float, initial_nuclear,
                    window_us: float) -> float:
    """Photons emitted during the readout window (integral of the rate).

    The photon count rides along as an extra quadrature variable of the same
    adaptive integration, so no separate sampling grid is involved.
    """
    if window_us <= 0:
        raise ValueError("window_us must be positive")
    matrix = build_rate_matrix(rates, b_gauss)
    augmented = np.zeros((N_LEVELS + 1, N_LEVELS + 1))
    augmented[:N_LEVELS, :N_LEVELS] = matrix
    augmented[N_LEVELS, N_GROUND:N_GROUND + N_EXCITED] = rates.radiative_rate_mhz
    p0 = np.concatenate([initial_populations(initial_nuclear), [0.0]])
    p, _, _ = _integrate(augmented, p0, window_us)
    return float(p[N_LEVELS])


@dataclass(frozen=True)
class ReadoutModel:
    """Maps nuclear populations to a normalized fluorescence signal.

    Parametric mode: the brightness of |0,0> relative to |0,+1> follows the
    Lorentzian contrast curve C(B), and the |0,-1> brightness crosses that of
    |0,0> at crossover_gauss (brighter below, dimmer above) over a linear
    ramp of crossover_width_gauss.  The ramp amplitude +-C(B)/2 is a modeling
    choice; only the crossover field itself is measured.

    Rate mode: brightnesses come from the windowed fluorescence of the
    pumping rate model, normalized to the |0,+1> response.
    """

    mode: str = "parametric"
    contrast_c0: float = 0.038
    contrast_b0_gauss: float = 485.0
    contrast_fwhm_gauss: float = 90.0
    contrast_baseline: float = 0.0
    crossover_gauss: float = 495.0
    crossover_width_gauss: float = 40.0
    polarization: tuple = (1.0, 0.0, 0.0)
    readout_window_us: float = 0.5
    rate_params: ESLACRateParams | None = None

    def __post_init__(self):
        if self.mode not in ("parametric", "rate_model"):
            raise ValueError(f"unknown readout mode {self.mode!r}")
        if not 0.0 < self.contrast_c0 < 1.0:
            raise ValueError("contrast_c0 must be in (0, 1)")
        if self.contrast_fwhm_gauss <= 0:
            raise ValueError("contrast_fwhm_gauss must be positive")
        if self.contrast_baseline < 0:
            raise ValueError("contrast_baseline must be >= 0")
        if self.readout_window_us <= 0:
            raise ValueError("readout_window_us must be positive")
        pol = np.asarray(self.polarization, dtype=float)
        if pol.shape != (3,) or np.any(pol < 0) or abs(pol.sum() - 1.0) > 1e-9:
            raise ValueError("polarization must be 3 non-negative populations "
                             "summing to 1")
        object.__setattr__(self, "polarization", tuple(float(x) for x in pol))
        if self.mode == "rate_model" and self.rate_params is None:
            raise ValueError("rate_model mode requires rate_params")

    def contrast_curve(self, b_gauss: float) -> float:
        """Readout contrast C(B) between |0,+1> and |0,0>, parametric mode."""
        if self.mode != "parametric":
            raise ReadoutModeError(
                "contrast_curve is defined by the parametric model; in "
                "rate_model mode derive the contrast from brightnesses(b) or "
                "pump_steady_state instead")
        half = 0.5 * self.contrast_fwhm_gauss
        return self.contrast_baseline + self.contrast_c0 * half ** 2 / (
            (b_gauss - self.contrast_b0_gauss) ** 2 + half ** 2)

    def brightnesses(self, b_gauss: float) -> np.ndarray:
        """Relative brightness (beta_+1, beta_0, beta_-1), beta_+1 = 1."""
        if self.mode == "parametric":
            c = self.contrast_curve(b_gauss)
            beta_zero = 1.0 - c
            ramp = np.clip((self.crossover_gauss - b_gauss)
                           / (0.5 * self.crossover_width_gauss), -1.0, 1.0)
            beta_minus = beta_zero + 0.5 * c * ramp
            return np.array([1.0, beta_zero, beta_minus])
        reference = windowed_signal(self.rate_params, b_gauss, (1, 0, 0),
                                    self.readout_window_us)
        return np.array([
            windowed_signal(self.rate_params, b_gauss, initial,
                            self.readout_window_us) / reference
            for initial in ((1, 0, 0), (0, 1, 0), (0, 0, 1))])

    def signal_from_populations(self, populations, b_gauss: float) -> float:
        """Normalized fluorescence for nuclear populations over (m_I=+1,0,-1)."""
        p = np.asarray(populations, dtype=float)
        if p.shape != (3,) or np.any(p < -1e-9) or abs(p.sum() - 1.0) > 1e-6:
            raise ValueError("populations must be 3 non-negative values "
                             "summing to 1")
        return float(p @ self.brightnesses(b_gauss))

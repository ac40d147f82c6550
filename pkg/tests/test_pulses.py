import math

import numpy as np
import pytest

from nvnmr import (DecoherenceParams, PulseSegment, ReadoutModel,
                   SpinParameters, decaying_sinusoid_model, estimate_init,
                   fit_nonlinear, simulate_odnmr, simulate_rabi,
                   simulate_ramsey, transition_frequencies)
from nvnmr.pulses import (DriveAmbiguityError, InvalidStateError, Trace,
                          check_state, evolve_drive, evolve_free, populations,
                          state_from_populations)

from oracle9 import drive_populations

B = 503.0


def drive(duration, rf, omega_khz=2.5, phase=0.0):
    return PulseSegment(kind="rf_drive", duration_us=duration,
                        rf_frequency_mhz=rf, rabi_frequency_khz=omega_khz,
                        phase_rad=phase)


def test_free_evolution_keeps_diagonal_states(params, no_damping):
    rho = state_from_populations((0.2, 0.5, 0.3))
    evolved = evolve_free(rho, params, B, 123.4, no_damping)
    assert np.allclose(evolved, rho)


def test_free_evolution_coherence_phase(params, no_damping):
    pair = transition_frequencies(params, B)
    rho = np.array([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 0.0]],
                   dtype=complex)
    half_period = 1.0 / (2.0 * pair.f1_mhz)
    evolved = evolve_free(rho, params, B, half_period, no_damping)
    assert evolved[0, 1] == pytest.approx(-0.5, abs=1e-12)


def test_free_evolution_damps_coherence_to_1_over_e(params):
    dec = DecoherenceParams(t2_star_us=600.0, t_rabi_us=math.inf)
    rho = np.array([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 0.0]],
                   dtype=complex)
    evolved = evolve_free(rho, params, B, 600.0, dec)
    assert abs(evolved[0, 1]) == pytest.approx(0.5 / math.e, rel=1e-12)
    assert np.real(np.diag(evolved)) == pytest.approx([0.5, 0.5, 0.0])


def test_resonant_pi_pulse_full_transfer(params, no_damping):
    pair = transition_frequencies(params, B)
    rho = evolve_drive(state_from_populations((1, 0, 0)), params, B,
                       drive(200.0, pair.f1_mhz, 2.5), no_damping)
    assert np.real(rho[1, 1]) >= 0.999
    assert np.real(rho[0, 0]) == pytest.approx(0.0, abs=1e-9)


def test_resonant_pi_half_pulse_equal_populations(params, no_damping):
    pair = transition_frequencies(params, B)
    rho = evolve_drive(state_from_populations((1, 0, 0)), params, B,
                       drive(100.0, pair.f1_mhz, 2.5), no_damping)
    assert np.real(rho[0, 0]) == pytest.approx(0.5, abs=1e-9)
    assert np.real(rho[1, 1]) == pytest.approx(0.5, abs=1e-9)
    assert abs(rho[0, 1]) == pytest.approx(0.5, abs=1e-9)


def test_detuned_transfer_ceiling(params, no_damping):
    omega = 2.5e-3
    pair = transition_frequencies(params, B)
    # generalized half period at delta = omega
    duration = 1.0 / (2.0 * omega * math.sqrt(2.0))
    rho = evolve_drive(state_from_populations((1, 0, 0)), params, B,
                       drive(duration, pair.f1_mhz + omega, 2.5), no_damping)
    assert np.real(rho[1, 1]) == pytest.approx(0.5, abs=1e-9)


def test_drive_selects_nearer_transition_and_rejects_midpoint(params, no_damping):
    pair = transition_frequencies(params, B)
    rho0 = state_from_populations((0.0, 0.0, 1.0))
    rho = evolve_drive(rho0, params, B, drive(200.0, pair.f2_mhz, 2.5),
                       no_damping)
    assert np.real(rho[1, 1]) >= 0.999  # f2 couples |-1> <-> |0>
    midpoint = 0.5 * (pair.f1_mhz + pair.f2_mhz)
    with pytest.raises(DriveAmbiguityError):
        evolve_drive(rho0, params, B, drive(10.0, midpoint), no_damping)


def test_rwa_against_nine_level_oracle(params, no_damping):
    """Two-level RWA propagator vs the full 9-level integration."""
    omega_khz = 5.0
    for duration in (40.0, 100.0):
        f_rf, pop_plus, pop_zero = drive_populations(params, B, omega_khz * 1e-3,
                                                     duration)
        rho = evolve_drive(state_from_populations((1, 0, 0)), params, B,
                           drive(duration, f_rf, omega_khz), no_damping)
        assert abs(np.real(rho[0, 0]) - pop_plus) <= 1e-3
        assert abs(np.real(rho[1, 1]) - pop_zero) <= 1e-3


def test_state_validation():
    with pytest.raises(InvalidStateError):
        state_from_populations((0.5, 0.2, 0.2))
    with pytest.raises(InvalidStateError):
        check_state(np.eye(3, dtype=complex))  # trace 3
    bad = np.diag([1.2, -0.2, 0.0]).astype(complex)
    with pytest.raises(InvalidStateError):
        check_state(bad)


def test_segment_validation():
    with pytest.raises(ValueError):
        PulseSegment(kind="laser", duration_us=1.0)
    with pytest.raises(ValueError):
        PulseSegment(kind="rf_drive", duration_us=-1.0)
    seg = PulseSegment(kind="free_evolution", duration_us=5.0)
    with pytest.raises(ValueError):
        evolve_drive(state_from_populations((1, 0, 0)), SpinParameters(), B,
                     seg, DecoherenceParams())


def test_rabi_trace_contrast_and_pi_time(params, readout, no_damping):
    pair = transition_frequencies(params, B)
    durations = np.linspace(0.0, 400.0, 401)
    trace = simulate_rabi(params, B, pair.f1_mhz, 2.5, durations, readout,
                          no_damping)
    expected_contrast = readout.contrast_curve(B)
    assert abs(trace.contrast() - expected_contrast) <= 1e-6 * expected_contrast
    assert durations[np.argmin(trace.signal)] == pytest.approx(200.0, abs=1.0)


def test_rabi_trace_decaying_cosine_form(params, readout):
    """Driven trace follows 1 - C/2 (1 - e^{-t/T} cos(2 pi Omega t))."""
    dec = DecoherenceParams(t2_star_us=math.inf, t_rabi_us=800.0)
    pair = transition_frequencies(params, B)
    durations = np.linspace(0.0, 600.0, 241)
    trace = simulate_rabi(params, B, pair.f1_mhz, 2.5, durations, readout, dec)
    c = readout.contrast_curve(B)
    omega = 2.5e-3
    expected = 1.0 - 0.5 * c * (1.0 - np.exp(-durations / 800.0)
                                * np.cos(2.0 * np.pi * omega * durations))
    assert np.allclose(trace.signal, expected, atol=1e-12)


def test_rabi_flat_for_unpolarized_state(params, no_damping):
    readout = ReadoutModel(polarization=(1 / 3, 1 / 3, 1 / 3))
    pair = transition_frequencies(params, B)
    durations = np.linspace(0.0, 400.0, 81)
    trace = simulate_rabi(params, B, pair.f1_mhz, 2.5, durations, readout,
                          no_damping)
    assert np.ptp(trace.signal) <= 1e-12


def test_ramsey_full_swing_at_zero_delay(params, readout, no_damping):
    pair = transition_frequencies(params, B)
    trace = simulate_ramsey(params, B, pair.f1_mhz + 5e-3, [0.0],
                            readout=readout, dec=no_damping)
    assert trace.signal[0] == pytest.approx(1.0 - readout.contrast_curve(B),
                                            abs=1e-12)


def test_ramsey_fringe_frequency_and_envelope(params, readout):
    dec = DecoherenceParams(t2_star_us=600.0, t_rabi_us=math.inf)
    pair = transition_frequencies(params, B)
    taus = np.linspace(0.0, 1500.0, 751)
    trace = simulate_ramsey(params, B, pair.f1_mhz + 5e-3, taus,
                            readout=readout, dec=dec)
    model = decaying_sinusoid_model()
    fit = fit_nonlinear(model, taus, trace.signal,
                        estimate_init(model, taus, trace.signal))
    assert fit.converged
    assert abs(fit.value("frequency_mhz") - 5e-3) <= \
        max(fit.error("frequency_mhz"), 1e-9)
    assert abs(fit.value("t2_us") - 600.0) <= 0.02 * 600.0


def test_ramsey_f2_transition_with_auto_preparation(params, readout):
    dec = DecoherenceParams(t2_star_us=600.0, t_rabi_us=math.inf)
    pair = transition_frequencies(params, B)
    taus = np.linspace(0.0, 1200.0, 601)
    trace = simulate_ramsey(params, B, pair.f2_mhz - 5e-3, taus,
                            readout=readout, dec=dec)
    assert trace.params["transition"] == "f2"
    model = decaying_sinusoid_model()
    fit = fit_nonlinear(model, taus, trace.signal,
                        estimate_init(model, taus, trace.signal))
    assert abs(fit.value("frequency_mhz") - 5e-3) <= 1e-6


def test_ramsey_finite_pulses_keep_fringe_frequency(params, readout):
    """Finite pulses shift the fringe phase but not its frequency or swing."""
    dec = DecoherenceParams(t2_star_us=600.0, t_rabi_us=math.inf)
    pair = transition_frequencies(params, B)
    taus = np.linspace(0.0, 1200.0, 601)
    model = decaying_sinusoid_model()
    fits = []
    for pi2 in (0.0, 10.0):
        trace = simulate_ramsey(params, B, pair.f1_mhz + 5e-3, taus,
                                pi2_duration_us=pi2, readout=readout, dec=dec)
        fits.append(fit_nonlinear(model, taus, trace.signal,
                                  estimate_init(model, taus, trace.signal)))
    ideal, finite = fits
    assert finite.value("frequency_mhz") == \
        pytest.approx(ideal.value("frequency_mhz"), rel=1e-3)
    assert abs(finite.value("amplitude")) == \
        pytest.approx(abs(ideal.value("amplitude")), rel=0.2)


def test_ramsey_rejects_far_detuning(params, readout, no_damping):
    pair = transition_frequencies(params, B)
    with pytest.raises(ValueError):
        simulate_ramsey(params, B, pair.f1_mhz + 0.2, [0.0, 1.0],
                        readout=readout, dec=no_damping)


def test_odnmr_single_dip_under_full_polarization(params, readout, no_damping):
    pair = transition_frequencies(params, B)
    grid = np.linspace(4.6, 5.3, 701)
    trace = simulate_odnmr(params, B, grid, 200.0, 2.5, readout, no_damping)
    dip = grid[np.argmin(trace.signal)]
    assert abs(dip - pair.f1_mhz) <= 2e-3
    # no feature at f2: the |-1> and |0> levels are both empty
    near_f2 = np.abs(grid - pair.f2_mhz) < 0.05
    assert np.ptp(trace.signal[near_f2]) <= 1e-9


def test_odnmr_two_dips_with_shared_population(params, no_damping):
    readout = ReadoutModel(polarization=(0.6, 0.4, 0.0))
    pair = transition_frequencies(params, B)
    grid = np.linspace(4.6, 5.3, 1401)
    trace = simulate_odnmr(params, B, grid, 200.0, 2.5, readout, no_damping)
    signal = trace.signal
    interior = np.arange(5, len(grid) - 5)
    minima = [i for i in interior
              if signal[i] == signal[max(0, i - 20):i + 21].min()]
    dip_positions = sorted(grid[i] for i in
                           {min(minima, key=lambda i: abs(grid[i] - pair.f1_mhz)),
                            min(minima, key=lambda i: abs(grid[i] - pair.f2_mhz))})
    assert dip_positions[1] == pytest.approx(pair.f1_mhz, abs=2e-3)
    assert dip_positions[0] == pytest.approx(pair.f2_mhz, abs=2e-3)


def test_odnmr_linewidth_fourier_limited(params, readout, no_damping):
    pair = transition_frequencies(params, B)
    grid = np.linspace(pair.f1_mhz - 0.02, pair.f1_mhz + 0.02, 2001)
    trace = simulate_odnmr(params, B, grid, 200.0, 2.5, readout, no_damping)
    half = 0.5 * (trace.signal.max() + trace.signal.min())
    below = grid[trace.signal < half]
    fwhm_khz = (below[-1] - below[0]) * 1e3
    assert abs(fwhm_khz - 0.8 / 200.0 * 1e3) <= 0.25 * 4.0


def test_trace_preservation_over_random_sequences(params):
    rng = np.random.default_rng(42)
    pair = transition_frequencies(params, B)
    dec = DecoherenceParams(t2_star_us=300.0, t_rabi_us=800.0)
    rho = state_from_populations((0.5, 0.3, 0.2))
    for _ in range(30):
        if rng.random() < 0.5:
            rho = evolve_free(rho, params, B, rng.uniform(0.0, 50.0), dec)
        else:
            rf = rng.choice([pair.f1_mhz, pair.f2_mhz]) + rng.uniform(-5e-3, 5e-3)
            rho = evolve_drive(rho, params, B,
                               drive(rng.uniform(0.0, 100.0), rf,
                                     rng.uniform(0.5, 5.0),
                                     rng.uniform(0.0, 2 * math.pi)), dec)
        assert abs(np.trace(rho).real - 1.0) <= 1e-9
        assert np.linalg.eigvalsh(rho).min() >= -1e-9


def test_signal_scaling_leaves_fitted_frequency_unchanged(params, readout):
    dec = DecoherenceParams(t2_star_us=600.0, t_rabi_us=math.inf)
    pair = transition_frequencies(params, B)
    taus = np.linspace(0.0, 1000.0, 501)
    trace = simulate_ramsey(params, B, pair.f1_mhz + 5e-3, taus,
                            readout=readout, dec=dec)
    model = decaying_sinusoid_model()
    fit = fit_nonlinear(model, taus, trace.signal,
                        estimate_init(model, taus, trace.signal))
    scaled = 3.7 * trace.signal
    fit_scaled = fit_nonlinear(model, taus, scaled,
                               estimate_init(model, taus, scaled))
    assert fit_scaled.value("frequency_mhz") == \
        pytest.approx(fit.value("frequency_mhz"), rel=1e-9)
    assert fit_scaled.value("amplitude") == \
        pytest.approx(3.7 * fit.value("amplitude"), rel=1e-6)


def test_trace_container_validation():
    with pytest.raises(ValueError):
        Trace(abscissa=[0.0, 1.0], signal=[1.0], protocol="x",
              abscissa_name="t")
    with pytest.raises(ValueError):
        Trace(abscissa=[0.0], signal=[math.nan], protocol="x",
              abscissa_name="t")

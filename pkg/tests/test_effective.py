import numpy as np
import pytest

from nvnmr import (ValidityDomainError, effective_gyromagnetic_ratio,
                   effective_params, mean_transition_frequency,
                   transition_frequencies)
from nvnmr.effective import nuclear_level_energies

# Frozen arithmetic from the closed-form expressions at the default constants.
Q_EFF_0 = -4.943308222996516
Q_EFF_503 = -4.942547391658598
GAMMA_EFF_503 = 3.044209891355573e-4
F1_PERT_503 = 5.095671149193784
F2_PERT_503 = 4.789423634123413


def test_effective_quadrupole_zero_field(params):
    assert effective_params(params, 0.0).q_eff_mhz == \
        pytest.approx(Q_EFF_0, abs=1e-12)


def test_effective_quadrupole_503(params):
    eff = effective_params(params, 503.0)
    assert eff.q_eff_mhz == pytest.approx(Q_EFF_503, abs=1e-9)
    correction_khz = (eff.q_eff_mhz - params.q_mhz) * 1e3
    assert correction_khz == pytest.approx(3.152608, abs=1e-4)
    assert eff.valid


def test_effective_gyromagnetic_503(params):
    assert effective_gyromagnetic_ratio(params, 503.0) == \
        pytest.approx(GAMMA_EFF_503, abs=1e-12)


def test_mean_frequency_reduces_to_q_without_coupling(params):
    p = params.with_(a_perp_mhz=0.0)
    for b in (0.0, 123.4, 675.0):
        assert mean_transition_frequency(p, b) == abs(p.q_mhz)


def test_mean_frequency_monotone_decreasing(params):
    grid = np.arange(350.0, 675.0 + 1e-9, 5.0)
    values = [mean_transition_frequency(params, b) for b in grid]
    assert np.all(np.diff(values) < 0)


def test_gyromagnetic_reduces_and_decreases(params):
    assert effective_gyromagnetic_ratio(params.with_(a_perp_mhz=0.0), 500.0) \
        == params.gamma_n_mhz_per_g
    grid = np.arange(350.0, 675.0 + 1e-9, 5.0)
    values = [effective_gyromagnetic_ratio(params, b) for b in grid]
    assert np.all(np.diff(values) < 0)


def test_transitions_perturbative_503(params):
    pair = transition_frequencies(params, 503.0)
    assert pair.f1_mhz == pytest.approx(F1_PERT_503, abs=1e-9)
    assert pair.f2_mhz == pytest.approx(F2_PERT_503, abs=1e-9)
    assert pair.source == "perturbative"


def test_transitions_exact_matches_perturbative_503(params):
    exact = transition_frequencies(params, 503.0, method="exact")
    pert = transition_frequencies(params, 503.0)
    assert abs(exact.f1_mhz - pert.f1_mhz) <= 0.2e-3
    assert abs(exact.f2_mhz - pert.f2_mhz) <= 0.2e-3
    assert not exact.strong_mixing


def test_transitions_degenerate_at_zero_field(params):
    pair = transition_frequencies(params, 0.0)
    assert pair.f1_mhz == pair.f2_mhz == pytest.approx(abs(Q_EFF_0), abs=1e-12)


def test_perturbative_exact_agreement_over_studied_range(params):
    worst = 0.0
    for b in np.arange(350.0, 675.0 + 1e-9, 5.0):
        exact = transition_frequencies(params, float(b), method="exact")
        pert = transition_frequencies(params, float(b))
        worst = max(worst, abs(exact.f1_mhz - pert.f1_mhz),
                    abs(exact.f2_mhz - pert.f2_mhz))
    assert worst <= 0.2e-3


def test_mean_and_splitting_identities(params):
    for b in (10.0, 350.0, 503.0, 675.0):
        pair = transition_frequencies(params, b)
        eff = effective_params(params, b)
        assert pair.mean_mhz == pytest.approx(abs(eff.q_eff_mhz), abs=1e-12)
        assert pair.splitting_per_gauss(b) == \
            pytest.approx(eff.gamma_eff_mhz_per_g, abs=1e-12)


def test_correction_positive_below_gslac(params):
    for b in (0.0, 200.0, 500.0, 900.0, 1000.0):
        eff = effective_params(params, b, check=False)
        assert eff.q_eff_mhz - params.q_mhz > 0


def test_transverse_sign_flip_invariance(params):
    flipped = params.with_(a_perp_mhz=-params.a_perp_mhz)
    for b in (100.0, 503.0):
        for method in ("perturbative", "exact"):
            pair = transition_frequencies(params, b, method=method)
            pair_flipped = transition_frequencies(flipped, b, method=method)
            assert pair.f1_mhz == pytest.approx(pair_flipped.f1_mhz, abs=1e-9)
            assert pair.f2_mhz == pytest.approx(pair_flipped.f2_mhz, abs=1e-9)


def test_validity_guard_near_gslac(params):
    b_gslac = params.d_mhz / params.gamma_e_mhz_per_g
    with pytest.raises(ValidityDomainError, match="GSLAC"):
        effective_params(params, b_gslac)
    eff = effective_params(params, b_gslac, check=False)
    assert not eff.valid


def test_exact_method_field_range(params):
    with pytest.raises(ValueError):
        transition_frequencies(params, 950.0, method="exact")
    with pytest.raises(ValueError):
        transition_frequencies(params, 503.0, method="nonsense")


def test_nuclear_level_energies_consistent(params):
    energies = nuclear_level_energies(params, 503.0)
    pair = transition_frequencies(params, 503.0)
    assert abs(energies[0] - energies[1]) == pytest.approx(pair.f1_mhz, abs=1e-12)
    assert abs(energies[2] - energies[1]) == pytest.approx(pair.f2_mhz, abs=1e-12)

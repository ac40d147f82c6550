"""Second-order effective description of the m_S = 0 nuclear manifold.

Treating the transverse hyperfine coupling perturbatively, the three nuclear
sublevels of m_S = 0 are governed by an effective quadrupole constant and an
effective gyromagnetic ratio,

    Q_eff(B)     = Q + A_perp^2 D / (D^2 - gamma_e^2 B^2)
    gamma_eff(B) = gamma_n - gamma_e A_perp^2 / (D^2 - gamma_e^2 B^2)

valid away from the ground-state level anticrossing (GSLAC) at B = D/gamma_e
where the denominator vanishes.  The two observable nuclear transitions are
f1 = |Q_eff| + gamma_eff*B (|0,+1> -> |0,0>) and f2 = |Q_eff| - gamma_eff*B
(|0,-1> -> |0,0>) for the signs realized here (Q < 0, gamma_eff*B < |Q_eff|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import spinmodel
from .spinmodel import SpinParameters

# The neglected higher-order terms stay small as long as the resonant
# denominator exceeds this multiple of A_perp^2 * D.
DENOMINATOR_GUARD_FACTOR = 10.0

EXACT_B_MAX_GAUSS = 900.0


class ValidityDomainError(ValueError):
    """Field too close to the GSLAC for the second-order effective theory."""


@dataclass(frozen=True)
class EffectiveNuclearParams:
    q_eff_mhz: float
    gamma_eff_mhz_per_g: float
    b_gauss: float
    valid: bool


@dataclass(frozen=True)
class TransitionPair:
    """The two nuclear transition frequencies of the m_S = 0 manifold (MHz)."""

    f1_mhz: float
    f2_mhz: float
    source: str  # "exact" or "perturbative"
    strong_mixing: bool = False

    @property
    def mean_mhz(self) -> float:
        return 0.5 * (self.f1_mhz + self.f2_mhz)

    def splitting_per_gauss(self, b_gauss: float) -> float:
        return (self.f1_mhz - self.f2_mhz) / (2.0 * b_gauss)


def _denominator(params: SpinParameters, b_gauss: float) -> float:
    return params.d_mhz ** 2 - (params.gamma_e_mhz_per_g * b_gauss) ** 2


def effective_params(params: SpinParameters, b_gauss: float,
                     check: bool = True) -> EffectiveNuclearParams:
    """Effective nuclear constants at the given axial field.

    Raises ValidityDomainError near the GSLAC unless check=False, in which
    case the (unreliable) values are returned with valid=False.
    """
    den = _denominator(params, b_gauss)
    guard = DENOMINATOR_GUARD_FACTOR * params.a_perp_mhz ** 2 * params.d_mhz
    valid = abs(den) >= guard
    if check and not valid:
        b_gslac = params.d_mhz / params.gamma_e_mhz_per_g
        raise ValidityDomainError(
            f"B = {b_gauss:g} G is too close to the GSLAC at ~{b_gslac:.0f} G "
            f"for the second-order effective theory (|D^2 - gamma_e^2 B^2| = "
            f"{abs(den):.3g} MHz^2 < {guard:.3g} MHz^2)")
    if den == 0.0:  # exactly at the GSLAC; only reachable with check=False
        return EffectiveNuclearParams(q_eff_mhz=math.nan,
                                      gamma_eff_mhz_per_g=math.nan,
                                      b_gauss=b_gauss, valid=False)
    q_eff = params.q_mhz + params.a_perp_mhz ** 2 * params.d_mhz / den
    gamma_eff = (params.gamma_n_mhz_per_g
                 - params.gamma_e_mhz_per_g * params.a_perp_mhz ** 2 / den)
    return EffectiveNuclearParams(q_eff_mhz=q_eff, gamma_eff_mhz_per_g=gamma_eff,
                                  b_gauss=b_gauss, valid=valid)


def mean_transition_frequency(params: SpinParameters, b_gauss: float) -> float:
    """(f1 + f2)/2 = |Q_eff(B)| in MHz."""
    return abs(effective_params(params, b_gauss).q_eff_mhz)


def effective_gyromagnetic_ratio(params: SpinParameters, b_gauss: float) -> float:
    """(f1 - f2)/(2B) = gamma_eff(B) in MHz/G."""
    return effective_params(params, b_gauss).gamma_eff_mhz_per_g


def nuclear_level_energies(params: SpinParameters, b_gauss: float):
    """Effective energies (MHz) of the m_S=0 sublevels, ordered m_I = +1, 0, -1."""
    eff = effective_params(params, b_gauss)
    return tuple(
        eff.q_eff_mhz * (m_i ** 2 - 2.0 / 3.0) - eff.gamma_eff_mhz_per_g * b_gauss * m_i
        for m_i in (1, 0, -1))


def transition_frequencies(params: SpinParameters, b_gauss: float,
                           method: str = "perturbative") -> TransitionPair:
    """f1 and f2 from the effective theory or from exact diagonalization.

    The exact path extracts eigenvalue differences between the labeled
    |0,+1>, |0,0>, |0,-1> eigenstates, so near an anticrossing it degrades
    loudly via the strong_mixing flag instead of silently picking the wrong
    eigenvalues.
    """
    if method == "perturbative":
        eff = effective_params(params, b_gauss)
        zeeman = eff.gamma_eff_mhz_per_g * b_gauss
        return TransitionPair(f1_mhz=abs(eff.q_eff_mhz) + zeeman,
                              f2_mhz=abs(eff.q_eff_mhz) - zeeman,
                              source="perturbative")
    if method == "exact":
        if not 0.0 <= b_gauss <= EXACT_B_MAX_GAUSS:
            raise ValueError(
                f"exact transition extraction supports 0 <= B <= "
                f"{EXACT_B_MAX_GAUSS:g} G, got {b_gauss:g}")
        h = spinmodel.build_ground_hamiltonian(params, b_gauss)
        decomposition = spinmodel.label_states(spinmodel.eigensolve(h))
        e_plus = decomposition.energy_of(0, 1)
        e_zero = decomposition.energy_of(0, 0)
        e_minus = decomposition.energy_of(0, -1)
        return TransitionPair(f1_mhz=abs(e_plus - e_zero),
                              f2_mhz=abs(e_minus - e_zero),
                              source="exact",
                              strong_mixing=decomposition.strong_mixing)
    raise ValueError(f"method must be 'exact' or 'perturbative', got {method!r}")

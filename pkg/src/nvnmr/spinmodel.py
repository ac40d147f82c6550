"""Spin operators and the coupled electron-nuclear Hamiltonian of the NV center.

The NV- ground state is an electron spin S=1 coupled to the intrinsic 14N
nuclear spin I=1, giving a 9-dimensional product space.  Everything here works
in frequency units (MHz, h=1), with magnetic fields in gauss applied along the
NV symmetry axis (z).  The product basis is ordered with the electron
projection outermost:

    index = 3*(1 - m_S) + (1 - m_I),   m_S, m_I in {+1, 0, -1}

so index 0 is |+1,+1>, index 4 is |0,0>, index 8 is |-1,-1>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# Default coupling constants (MHz and MHz/G).  D, gamma_e, Q, gamma_n and
# A_perp are measured values for the NV- / 14N system; A_par is a literature
# value -- only the ~2.2 MHz hyperfine line spacing constrains its magnitude
# in the measurements this package models, so treat it as configurable.
D_GS_MHZ = 2870.0
GAMMA_E_MHZ_PER_G = 2.803
Q_14N_MHZ = -4.9457
GAMMA_N_MHZ_PER_G = 3.075e-4
A_PAR_MHZ = -2.16
A_PERP_MHZ = -2.62

M_VALUES = (1, 0, -1)

HERMITICITY_RTOL = 1e-12


class InvalidParameterError(ValueError):
    """A physical parameter is non-finite or outside its allowed range."""


class NotHermitianError(ValueError):
    """A matrix that must be Hermitian is not."""


@dataclass(frozen=True)
class SpinParameters:
    """Coupling constants of the axial-field spin Hamiltonian.

    d_mhz: zero-field splitting of the electron spin.
    gamma_e_mhz_per_g / gamma_n_mhz_per_g: electron / nuclear gyromagnetic
        ratios (nuclear positive for 14N).
    q_mhz: nuclear quadrupole coupling constant (signed, negative for 14N).
    a_par_mhz / a_perp_mhz: axial / transverse hyperfine constants.
    """

    d_mhz: float = D_GS_MHZ
    gamma_e_mhz_per_g: float = GAMMA_E_MHZ_PER_G
    q_mhz: float = Q_14N_MHZ
    gamma_n_mhz_per_g: float = GAMMA_N_MHZ_PER_G
    a_par_mhz: float = A_PAR_MHZ
    a_perp_mhz: float = A_PERP_MHZ

    def __post_init__(self):
        for name in ("d_mhz", "gamma_e_mhz_per_g", "q_mhz", "gamma_n_mhz_per_g",
                     "a_par_mhz", "a_perp_mhz"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
        if self.gamma_e_mhz_per_g <= 0:
            raise InvalidParameterError("gamma_e_mhz_per_g must be positive")

    def with_(self, **changes) -> "SpinParameters":
        return replace(self, **changes)


@dataclass(frozen=True)
class SpinOperatorSet:
    """Dimensionless spin-1 matrices in the {+1, 0, -1} basis."""

    sz: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    s_squared: np.ndarray
    dimension: int = 3


def build_spin_operators() -> SpinOperatorSet:
    """Standard spin-1 operators with <m+-1|S+-|m> = sqrt(2 - m(m+-1))."""
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    s_plus = math.sqrt(2.0) * np.array(
        [[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)
    s_minus = s_plus.conj().T
    sx = 0.5 * (s_plus + s_minus)
    sy = -0.5j * (s_plus - s_minus)
    s_squared = sx @ sx + sy @ sy + sz @ sz
    return SpinOperatorSet(sz=sz, s_plus=s_plus, s_minus=s_minus,
                           sx=sx, sy=sy, s_squared=s_squared)


def basis_index(m_s: int, m_i: int) -> int:
    """Index of the product state |m_S, m_I> in the fixed basis ordering."""
    if m_s not in M_VALUES or m_i not in M_VALUES:
        raise InvalidParameterError(f"spin projections must be in {M_VALUES}")
    return 3 * (1 - m_s) + (1 - m_i)


def basis_state(index: int) -> tuple[int, int]:
    """(m_S, m_I) of a basis index; inverse of basis_index."""
    if not 0 <= index <= 8:
        raise InvalidParameterError("basis index must be in 0..8")
    return 1 - index // 3, 1 - index % 3


def build_hamiltonian(params: SpinParameters, b_gauss: float) -> np.ndarray:
    """Assemble the 9x9 spin Hamiltonian for an axial field (MHz).

    H = D(Sz^2 - S^2/3) + gamma_e Sz B + Q(Iz^2 - I^2/3) - gamma_n Iz B
        + A_par Sz Iz + (A_perp/2)(S+ I- + S- I+)

    Note the minus sign on the nuclear Zeeman term.  The same builder serves
    the optical excited state: pass a parameter set with the excited-state
    D and hyperfine constants.
    """
    if not math.isfinite(b_gauss):
        raise InvalidParameterError(f"b_gauss must be finite, got {b_gauss!r}")
    ops = build_spin_operators()
    eye = np.eye(3, dtype=complex)
    h = (params.d_mhz * np.kron(ops.sz @ ops.sz - ops.s_squared / 3.0, eye)
         + params.gamma_e_mhz_per_g * b_gauss * np.kron(ops.sz, eye)
         + params.q_mhz * np.kron(eye, ops.sz @ ops.sz - ops.s_squared / 3.0)
         - params.gamma_n_mhz_per_g * b_gauss * np.kron(eye, ops.sz)
         + params.a_par_mhz * np.kron(ops.sz, ops.sz)
         + 0.5 * params.a_perp_mhz * (np.kron(ops.s_plus, ops.s_minus)
                                      + np.kron(ops.s_minus, ops.s_plus)))
    return h


# The ground-state Hamiltonian is the generic builder with ground-state
# parameters; aliased for call-site readability.
build_ground_hamiltonian = build_hamiltonian


@dataclass(frozen=True)
class StateLabel:
    """Dominant product-basis assignment of an eigenstate."""

    m_s: int
    m_i: int
    overlap_weight: float


@dataclass(frozen=True)
class EigenDecomposition:
    """Sorted eigensystem of a 9x9 Hamiltonian (eigenvalues ascending, MHz)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    labels: tuple[StateLabel, ...] | None = None
    strong_mixing: bool = False

    def energy_of(self, m_s: int, m_i: int) -> float:
        """Eigenvalue of the state labeled |m_S, m_I>; requires labels."""
        if self.labels is None:
            raise ValueError("decomposition has no labels; call label_states first")
        for value, label in zip(self.eigenvalues, self.labels):
            if label.m_s == m_s and label.m_i == m_i:
                return float(value)
        raise ValueError(f"no eigenstate labeled |{m_s},{m_i}>")


def assert_hermitian(h: np.ndarray, rtol: float = HERMITICITY_RTOL) -> None:
    scale = max(np.abs(h).max(), 1.0)
    deviation = np.abs(h - h.conj().T).max()
    if deviation > rtol * scale:
        raise NotHermitianError(
            f"matrix deviates from Hermiticity by {deviation:.3e} (scale {scale:.3e})")


def eigensolve(h: np.ndarray) -> EigenDecomposition:
    """Exact dense diagonalization with a deterministic phase convention.

    Eigenvalues come out ascending; each eigenvector is rephased so its
    largest-magnitude component is real and positive, which makes labeling
    and regression tests reproducible.
    """
    h = np.asarray(h, dtype=complex)
    assert_hermitian(h)
    eigenvalues, eigenvectors = np.linalg.eigh(h)
    eigenvectors = eigenvectors.copy()
    for col in range(eigenvectors.shape[1]):
        pivot = int(np.argmax(np.abs(eigenvectors[:, col])))
        amplitude = eigenvectors[pivot, col]
        if abs(amplitude) > 0:
            eigenvectors[:, col] *= abs(amplitude) / amplitude
    return EigenDecomposition(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


# A weight at or below this value marks an eigenstate as strongly mixed in
# the product basis (expected near level anticrossings).
STRONG_MIXING_WEIGHT = 0.5


def label_states(decomposition: EigenDecomposition) -> EigenDecomposition:
    """Assign each eigenvector its dominant |m_S, m_I> product label.

    Assignment is a greedy bijection over (eigenvector, basis state) pairs in
    descending overlap order, so every basis label is used exactly once even
    when states mix.  Ties break toward the lower basis index, then the lower
    eigenvector column.  Any assignment with weight <= 0.5 raises the
    strong-mixing flag on the decomposition.
    """
    vectors = decomposition.eigenvectors
    dim = vectors.shape[1]
    overlaps = np.abs(vectors) ** 2  # rows: basis states, columns: eigenvectors
    candidates = sorted(
        ((overlaps[row, col], row, col) for row in range(dim) for col in range(dim)),
        key=lambda item: (-item[0], item[1], item[2]))
    assignment: dict[int, tuple[int, float]] = {}
    used_rows: set[int] = set()
    for weight, row, col in candidates:
        if row in used_rows or col in assignment:
            continue
        used_rows.add(row)
        assignment[col] = (row, weight)
        if len(assignment) == dim:
            break
    labels = []
    strong_mixing = False
    for col in range(dim):
        row, weight = assignment[col]
        m_s, m_i = basis_state(row)
        labels.append(StateLabel(m_s=m_s, m_i=m_i, overlap_weight=float(weight)))
        if weight <= STRONG_MIXING_WEIGHT + 1e-12:
            strong_mixing = True
    return EigenDecomposition(
        eigenvalues=decomposition.eigenvalues,
        eigenvectors=decomposition.eigenvectors,
        labels=tuple(labels),
        strong_mixing=strong_mixing)

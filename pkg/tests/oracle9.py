"""Independent validation oracle: full 9-level drive integration, no RWA.

Integrates the time-dependent Schroedinger equation for the complete
electron-nuclear Hamiltonian with a cosine RF drive on the nuclear x
operator, in the interaction picture of the static Hamiltonian (an exact
transformation that removes the GHz diagonal scales while keeping all
counter-rotating and cross-transition terms).  Used to check the two-level
rotating-wave propagator of the pulse module.
"""

import math

import numpy as np

from nvnmr import build_ground_hamiltonian, eigensolve, label_states


def drive_populations(params, b_gauss, omega_mhz, duration_us, dt_us=0.004):
    """On-resonance f1 drive from the |0,+1> eigenstate.

    Returns (f_rf, population of |0,+1>, population of |0,0>) after the
    pulse, with populations measured in the eigenbasis.
    """
    h0 = build_ground_hamiltonian(params, b_gauss)
    decomposition = label_states(eigensolve(h0))
    cols = {(label.m_s, label.m_i): col
            for col, label in enumerate(decomposition.labels)}
    v = decomposition.eigenvectors
    lam = decomposition.eigenvalues
    f_rf = abs(decomposition.energy_of(0, 1) - decomposition.energy_of(0, 0))

    ix = np.zeros((3, 3), dtype=complex)
    ix[0, 1] = ix[1, 0] = ix[1, 2] = ix[2, 1] = 1.0 / math.sqrt(2.0)
    drive_op = np.kron(np.eye(3, dtype=complex), ix)
    # the 1/sqrt2 matrix element makes the two-level coupling equal omega
    amp = math.sqrt(2.0) * omega_mhz
    v_tilde = v.conj().T @ drive_op @ v
    omega_jk = 2.0 * math.pi * (lam[:, None] - lam[None, :])

    def rhs(t, phi):
        coupling = amp * math.cos(2.0 * math.pi * f_rf * t) \
            * (np.exp(1j * omega_jk * t) * v_tilde)
        return -2j * math.pi * (coupling @ phi)

    phi = np.zeros(9, dtype=complex)
    phi[cols[(0, 1)]] = 1.0
    steps = int(round(duration_us / dt_us))
    t = 0.0
    for _ in range(steps):
        k1 = rhs(t, phi)
        k2 = rhs(t + dt_us / 2, phi + dt_us / 2 * k1)
        k3 = rhs(t + dt_us / 2, phi + dt_us / 2 * k2)
        k4 = rhs(t + dt_us, phi + dt_us * k3)
        phi = phi + dt_us / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt_us
    populations = np.abs(phi) ** 2
    return f_rf, populations[cols[(0, 1)]], populations[cols[(0, 0)]]

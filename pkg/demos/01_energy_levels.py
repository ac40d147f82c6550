"""Ground-state energy levels of the NV center with its 14N nucleus.

Sweeps the axial magnetic field, diagonalizes the 9-level electron-nuclear
Hamiltonian exactly and plots the three electron manifolds with their nuclear
sublevels.  Also prints the labeled m_S = 0 nuclear transitions at 503 G,
where the two ODNMR resonances of the nuclear workbench live.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nvnmr import (SpinParameters, build_ground_hamiltonian, eigensolve,
                   label_states, transition_frequencies)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

params = SpinParameters()
fields = np.linspace(0.0, 900.0, 181)
levels = np.array([eigensolve(build_ground_hamiltonian(params, b)).eigenvalues
                   for b in fields])

fig, (ax_all, ax_nuclear) = plt.subplots(1, 2, figsize=(10, 4))
ax_all.plot(fields, levels, lw=0.8, color="tab:blue")
ax_all.set_xlabel("B (G)")
ax_all.set_ylabel("energy (MHz)")
ax_all.set_title("9-level ground-state spectrum")

# zoom on the m_S = 0 nuclear sublevels (middle triplet)
ax_nuclear.plot(fields, levels[:, 3:6], lw=1.2)
ax_nuclear.set_xlabel("B (G)")
ax_nuclear.set_ylabel("energy (MHz)")
ax_nuclear.set_title(r"$m_S = 0$ nuclear sublevels")
fig.tight_layout()
fig.savefig(OUT / "energy_levels.png", dpi=150)
print(f"wrote {OUT / 'energy_levels.png'}")

decomposition = label_states(eigensolve(build_ground_hamiltonian(params, 503.0)))
print("\nlabeled m_S = 0 manifold at 503 G:")
for m_i, name in ((1, "+1"), (0, "0"), (-1, "-1")):
    print(f"  |0,{name:>2}>  E = {decomposition.energy_of(0, m_i):+9.4f} MHz")

for method in ("exact", "perturbative"):
    pair = transition_frequencies(params, 503.0, method=method)
    print(f"{method:>13}: f1 = {pair.f1_mhz:.6f} MHz, f2 = {pair.f2_mhz:.6f} MHz")

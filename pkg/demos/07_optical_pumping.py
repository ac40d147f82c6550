"""Mechanistic rate model of nuclear polarization at the ESLAC.

Near 500 G the excited-state flip-flop channels |0,-1> <-> |-1,0> and
|0,0> <-> |-1,+1> become strongly mixed; combined with the spin-selective
intersystem crossing this pumps the nucleus into |0,+1> and makes the early
fluorescence depend on the nuclear state.  All rate constants here are
plausible placeholders, not fitted values: the model demonstrates the
mechanism, it does not reproduce measured trace shapes.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nvnmr import (ESLACRateParams, excited_state_mixing, fluorescence_trace,
                   pump_steady_state)
from nvnmr.readout import windowed_signal

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

rates = ESLACRateParams()
fields = np.linspace(350.0, 675.0, 40)

weights = np.array([[c.mixing_weight for c in excited_state_mixing(rates, b)]
                    for b in fields])
polarization = np.array([pump_steady_state(rates, float(b)).ground_nuclear[0]
                         for b in fields])
print(f"steady-state P(|0,+1>) at 500 G: "
      f"{pump_steady_state(rates, 500.0).ground_nuclear[0]:.4f}")

window = 0.5
contrast = np.array([
    1.0 - windowed_signal(rates, float(b), (0, 1, 0), window)
    / windowed_signal(rates, float(b), (1, 0, 0), window)
    for b in fields])
peak = fields[np.argmax(contrast)]
print(f"windowed readout contrast peaks at ~{peak:.0f} G "
      f"with value {contrast.max():.3f}")

grid = np.linspace(0.0, 3.0, 121)
traces = {name: fluorescence_trace(rates, 503.0, initial, grid)
          for name, initial in (("|0,+1>", (1, 0, 0)), ("|0,0>", (0, 1, 0)),
                                ("|0,-1>", (0, 0, 1)))}

fig, axes = plt.subplots(1, 3, figsize=(13, 4))
axes[0].plot(fields, weights[:, 0], label="|0,-1> <-> |-1,0>")
axes[0].plot(fields, weights[:, 1], "--", label="|0,0> <-> |-1,+1>")
axes[0].set_xlabel("B (G)")
axes[0].set_ylabel(r"$\sin^2 2\theta$")
axes[0].set_title("excited-state mixing weight")
axes[0].legend(fontsize=8)
axes[1].plot(fields, polarization)
axes[1].set_xlabel("B (G)")
axes[1].set_ylabel("steady-state P(|0,+1>)")
axes[1].set_title("optical nuclear polarization")
for name, trace in traces.items():
    axes[2].plot(trace.abscissa, trace.signal, label=f"start in {name}")
axes[2].axvline(window, color="gray", lw=0.5)
axes[2].set_xlabel("time under illumination (us)")
axes[2].set_ylabel("emission rate (1/us)")
axes[2].set_title("nuclear-state-dependent fluorescence")
axes[2].legend(fontsize=8)
fig.tight_layout()
fig.savefig(OUT / "optical_pumping.png", dpi=150)
print(f"wrote {OUT / 'optical_pumping.png'}")

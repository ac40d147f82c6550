"""Temperature dependence of the nuclear quadrupole constant.

Generates a synthetic temperature series at 484 G from the published quartic
|Q|(T) together with a D(T) model, inverts the mean-frequency expression row
by row, refits the quartic and reports the slope at 297 K.  Also compares the
fractional temperature shifts of |Q| and D, which track each other up to a
roughly constant factor.

The shipped D(T) file is an illustrative literature anchor, not a measured
dataset; substitute your own table for quantitative work.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nvnmr import (QPolynomial, SpinParameters, TemperatureSeries,
                   analyze_temperature_series, fractional_shift_ratio,
                   transition_frequencies)
from nvnmr.analysis import Q_VS_T_COEFFICIENTS_KHZ
from nvnmr.dataio import load_d_model

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

params = SpinParameters()
d_model = load_d_model(Path(__file__).parent.parent / "configs"
                       / "d_of_t_literature.json")
truth = QPolynomial(a_khz=Q_VS_T_COEFFICIENTS_KHZ)
b_gauss = 484.0

grid = np.linspace(77.5, 420.0, 40)
f1 = np.empty_like(grid)
f2 = np.empty_like(grid)
for i, t in enumerate(grid):
    p_t = params.with_(q_mhz=-1e-3 * float(truth(t)),
                       d_mhz=float(d_model(t)))
    pair = transition_frequencies(p_t, b_gauss)
    f1[i], f2[i] = pair.f1_mhz, pair.f2_mhz
series = TemperatureSeries(t_kelvin=grid, f1_mhz=f1, f2_mhz=f2,
                           b_gauss=b_gauss)

result = analyze_temperature_series(series, d_model)
print("recovered |Q|(T) coefficients (kHz/K^n):", result.polynomial.a_khz)
print(f"slope at {result.slope_t_kelvin:g} K: "
      f"{result.slope_hz_per_k:.3f} Hz/K")
print(f"|Q|(77.5 K) - |Q|(420 K) = "
      f"{result.q_abs_khz[0] - result.q_abs_khz[-1]:.3f} kHz")

stats = fractional_shift_ratio(truth, d_model, (100.0, 400.0))
print(f"fractional-shift ratio |Q| vs D over 100-400 K: "
      f"mean {stats.mean:.3f}, spread {stats.std:.3f} "
      f"(D shifts ~{1.0/stats.mean:.1f}x faster)")

mean_khz = 0.5 * (series.f1_mhz + series.f2_mhz) * 1e3
fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(grid, mean_khz, "o", ms=4, label="(f1+f2)/2")
ax.plot(grid, result.q_abs_khz, "s", ms=4, label="|Q| (correction removed)")
ax.plot(grid, truth(grid), lw=1, label="quartic truth")
ax.set_xlabel("temperature (K)")
ax.set_ylabel("frequency (kHz)")
ax.set_title(f"nuclear quadrupole constant vs temperature at {b_gauss:g} G")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "temperature_dependence.png", dpi=150)
print(f"wrote {OUT / 'temperature_dependence.png'}")

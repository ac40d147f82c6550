"""Rotation-rate sensitivity of a nuclear-spin ensemble gyroscope.

delta_omega = 1/(C sqrt(eta N T2* tau)): the nuclear spins trade three
orders of magnitude in gyromagnetic ratio (robustness to field noise) for
contrast, but their ~10^3 longer coherence time wins back most of the shot-
noise penalty.  The demo tabulates the scaling against readout contrast.
"""

from nvnmr import sensitivity

base = dict(collection_efficiency=0.01, spin_count=1e12, t2_star_s=6e-4,
            integration_s=1.0)

print("contrast   delta_omega (rad/s)   relative")
reference = sensitivity(contrast=0.038, **base)
for contrast in (0.005, 0.010, 0.020, 0.038):
    value = sensitivity(contrast=contrast, **base)
    print(f"  {contrast:5.3f}     {value:12.5e}       {value/reference:6.2f}x")

print("\nintegration-time scaling at C = 0.038:")
for tau in (1.0, 4.0, 16.0, 64.0):
    value = sensitivity(contrast=0.038, **{**base, "integration_s": tau})
    print(f"  tau = {tau:5.1f} s -> {value:12.5e} rad/s")

electron = sensitivity(contrast=0.038, collection_efficiency=0.01,
                       spin_count=1e12, t2_star_s=6e-7, integration_s=1.0)
nuclear = sensitivity(contrast=0.038, collection_efficiency=0.01,
                      spin_count=1e12, t2_star_s=6e-4, integration_s=1.0)
print(f"\nsame contrast, 1000x coherence-time advantage: "
      f"{electron/nuclear:.1f}x better for the nuclear spins")

"""
Rabi oscillations of the dark state
===================================

The idealised sensor oscillates as cos^2(Omega t / sqrt 8).  The refined
model keeps the counter-rotating microwave terms and the off-resonant
levels; this script shows where the two agree and where they do not.
"""

import numpy as np

from bayesmag.dynamics import p_d_analytic, propagate_refined, rabi_period
from bayesmag.physics import SensorConfig, SignalConfig, khz

# Weak signal, strong field: the rotating-wave picture holds.
om = khz(1.0)
t = np.linspace(0, rabi_period(om), 9)
res = propagate_refined(SensorConfig(b_z=1e-3), SignalConfig(om), t)
print("B = 1 mT, Omega = 1 kHz")
for tk, a, b in zip(t, res.p_d, p_d_analytic(t, om)):
    print(f"  t = {tk * 1e3:6.3f} ms   refined {a:.4f}   cos^2 {b:.4f}")

# Strong, slightly detuned signal at low field: large departures.
om = khz(8.0)
t = np.linspace(0, rabi_period(om), 200)
res = propagate_refined(SensorConfig(b_z=0.4e-3), SignalConfig(om, khz(0.25)), t)
dev = np.abs(res.p_d - p_d_analytic(t, om))
print(f"\nB = 0.4 mT, Omega = 8 kHz, xi = 0.25 kHz: max |dP| = {dev.max():.3f} "
      f"at t = {t[dev.argmax()] * 1e6:.1f} us")
print(f"worst norm drift {np.abs(res.norms - 1).max():.1e}")

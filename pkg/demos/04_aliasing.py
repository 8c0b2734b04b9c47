"""
Aliasing and the Nyquist bound
==============================

Sampling every 25 ms limits the recoverable Rabi frequency.  A prior
that extends beyond that bound picks up spurious peaks; truncating it
removes them.
"""

import numpy as np

from bayesmag.inference import Flat, Prior, find_modes, grid_posterior, posterior_moments
from bayesmag.physics import TWO_PI, hz, nyquist_max_rabi
from bayesmag.reproduce import aliasing_dataset

data = aliasing_dataset(seed=0)
w_max = nyquist_max_rabi(0.025)
print(f"Omega_max = {w_max / TWO_PI:.2f} Hz")

wide = np.linspace(hz(0.1), hz(100.0), 10_000)
ax, dens = grid_posterior(data, Prior((Flat(wide[0], wide[-1]),)), wide).marginal()
for i in find_modes(dens):
    print(f"  peak at {ax[i] / TWO_PI:6.2f} Hz, relative height {dens[i] / dens.max():.2f}")

cut = wide[wide <= w_max]
m, s = posterior_moments(grid_posterior(data, Prior((Flat(cut[0], cut[-1]),)), cut))
print(f"truncated prior: Omega = {m / TWO_PI:.3f} +- {s / TWO_PI:.3f} Hz (true 7 Hz)")

"""
Single-parameter estimation on a grid
=====================================

A sparse, noisy record (18 times, 4 shots each) of a 1 kHz signal.  We
compare the grid posterior with FFT peak picking and a least-squares fit.
"""

import numpy as np

from bayesmag import io
from bayesmag.baselines import fft_estimate, lsq_fit_cos2
from bayesmag.inference import case_i_prior, find_modes, grid_posterior, posterior_moments
from bayesmag.physics import khz, to_khz
from bayesmag.reproduce import case_i_grid

data = io.load_fixture("case_i_nm4")
print("successes per time:", data.x.tolist())

post = grid_posterior(data, case_i_prior(), case_i_grid())
m, s = posterior_moments(post)
print(f"posterior      Omega = {to_khz(m):.4f} +- {to_khz(s):.4f} kHz")

# The FFT is limited by the record length: only a few bins below 2 kHz.
est, unc, spec = fft_estimate(data)
print(f"FFT            Omega = {to_khz(est):.3f} +- {to_khz(unc):.3f} kHz"
      f"  (bin width {to_khz(spec.resolution):.3f} kHz)")

fit = lsq_fit_cos2(data, khz(1.0))
print(f"least squares  Omega = {to_khz(fit.params[0]):.4f} +- {to_khz(fit.ci68[0]):.4f} kHz")

# With a single shot per time the posterior splits into several peaks,
# and its mean and width stop being a good summary.
one = grid_posterior(io.load_fixture("case_i_nm1"), case_i_prior(), case_i_grid())
ax, dens = one.marginal()
peaks = find_modes(dens)
print("\nN_m = 1 posterior peaks (kHz):", np.round(to_khz(ax[peaks]), 3).tolist())

"""Rabi nutation seen through the boxcar charge Q(tau).

Four microwave powers, P = 0.25 .. 4 W, give B1 = 0.05 .. 0.2 mT. The FFT
peak of each Q(tau) record should scale linearly with B1 with slope gamma.
"""
import math

import numpy as np

from edmr import SpinPairConfig, gyromagnetic, resonant_config, run_rabi_series

cfg = resonant_config(SpinPairConfig())
taus = 4e-9 * np.arange(1000)
series = run_rabi_series(cfg, taus, powers=[0.25, 1.0, 2.25, 4.0], b1_ref=0.1, p_ref=1.0)

gam_hz = gyromagnetic(cfg.g_a) / (2 * math.pi) * 1e-3
for b1, f in zip(series.b1, series.peak_freqs):
    print(f"B1 = {b1:.3f} mT  Rabi peak {f / 1e6:.4f} MHz  (gamma B1 = {gam_hz * b1 / 1e6:.4f} MHz)")
fit = series.fit
print(f"slope/gamma = {fit['slope_over_gamma']:.5f}, intercept = {fit['intercept_Hz']:.0f} Hz, "
      f"FFT bin = {fit['bin_width_Hz'] / 1e3:.2f} kHz")

"""Nutation of weakly and strongly exchange-coupled pairs.

Weak coupling: only the donor is driven and the singlet content follows
sin^2(gamma B1 tau / 2) / 2 exactly.

Strong coupling with identical g-values: the drive acts on the total spin,
which commutes with the exchange term. Singlet content cannot change; the
triplet manifold rotates as a spin 1, so the T0 population oscillates at
twice gamma B1 and T- at gamma B1.
"""
import math

import numpy as np

from edmr import (NoPeakError, SpinPairConfig, fft_of_Q, gyromagnetic, peak_frequency,
                  resonant_config, run_nutation)

B1 = 0.1
taus = 1e-9 * np.arange(4000)

weak = resonant_config(SpinPairConfig())
s = run_nutation(weak, taus, B1, drive="donor").values
w = gyromagnetic(weak.g_a) * B1 * 1e-3
print("weak coupling, max deviation from closed form:",
      f"{np.abs(s - 0.5 * np.sin(w * taus / 2) ** 2).max():.1e}")

strong = resonant_config(SpinPairConfig(g_a=1.9985, g_b=1.9985, hyperfine_A=0.0,
                                        J_coupling=2 * math.pi * 50e6))
gb1 = w / (2 * math.pi)
for obs in ("singlet", "T0", "Tminus"):
    trace = run_nutation(strong, taus, B1, observable=obs).values
    try:
        f = peak_frequency(fft_of_Q(trace, taus, scale=1.0))
        print(f"strong coupling, {obs:8s} oscillates at {f / gb1:.3f} x gamma B1")
    except NoPeakError:
        print(f"strong coupling, {obs:8s} is constant (peak-to-peak {np.ptp(trace):.1e})")

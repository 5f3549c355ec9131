"""Rabi frequency versus static field around the m_I = -1/2 line.

Off resonance the nutation speeds up as sqrt((gamma B1)^2 + detuning^2);
the ridge of the spectrum map follows that hyperbola. Writes
detuning_map.svg with the formula overlaid in white.
"""
from pathlib import Path

import numpy as np

from edmr import SpinPairConfig, emit_plot, resonant_config, run_detuning_map

cfg = resonant_config(SpinPairConfig())
B = cfg.B0 + 0.1 * np.arange(-15, 16)
m = run_detuning_map(cfg, 4e-9 * np.arange(1000), B, 0.1)

err = (m.ridge - m.predicted) / m.bin_width
for b, r, p, e in zip(B[::3], m.ridge[::3], m.predicted[::3], err[::3]):
    print(f"B0 = {b:8.3f} mT   ridge {r / 1e6:7.3f} MHz   formula {p / 1e6:7.3f} MHz   ({e:+.2f} bin)")
print(f"largest deviation {np.abs(err).max():.3f} bin")

out = Path(__file__).with_name("detuning_map.svg")
out.write_text(emit_plot(m.result, "contour"))
print("wrote", out)

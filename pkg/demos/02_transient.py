"""Current transient after a resonant pi pulse.

The pulse moves pairs out of the long-lived triplet states, so the current
first drops (fast singlet recombination) and then overshoots while the
population relaxes back. The zero crossing separates the two regimes.
"""
import numpy as np

from edmr import PulseSpec, SpinPairConfig, TransientGrid, resonant_config, run_transient

cfg = resonant_config(SpinPairConfig())
times = TransientGrid(3e-6, 50e-9, 10 / cfg.rate_triplet).times
dI = run_transient(cfg, PulseSpec(), times).values

k = int(np.nonzero(np.diff(np.sign(dI)))[0][0])
print(f"line at B0 = {cfg.B0:.3f} mT")
print(f"minimum  {dI.min() * 1e6:+.3f} uA at {times[dI.argmin()] * 1e6:.2f} us")
print(f"zero crossing near {times[k] * 1e6:.2f} us")
print(f"maximum  {dI.max() * 1e6:+.3f} uA at {times[dI.argmax()] * 1e6:.1f} us")
for t in (5, 10, 20, 50, 100, 200, 300):
    i = int(round((t * 1e-6 - times[0]) / 50e-9))
    print(f"  t = {t:4d} us   dI = {dI[i] * 1e6:+9.4f} uA")

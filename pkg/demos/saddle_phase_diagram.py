"""Bulk saddle across the measurement-rate axis.

Prints P, S and the phase label for a few interaction strengths. Below
zeta = J the saddle has S > 0: critical without the diagonal term, volume
law with it. Above zeta = J only S = 0 survives. For V > 2J the order
parameter jumps at the boundary instead of vanishing continuously.
"""
import numpy as np

from fcs_syk.saddle import ModelParams, classify_phase, solve_saddle

for V in (0.0, 1.0, 3.0):
    print(f"V = {V}")
    for zeta in np.round(np.linspace(0.1, 2.5, 9), 12):
        p = ModelParams(J=1.0, V=V, zeta=zeta)
        s = solve_saddle(p)
        ph = classify_phase(p)
        print(f"  zeta={zeta:5.2f}  P={s.P:.6f}  S={s.S:.6f}  {ph.kind}")

"""Two saddle branches close to phi = pi.

Continuing from small phi upwards and from the 2 pi side downwards gives
two solutions whose F/N cross at phi = pi. The physical value is the lower
one, so F(phi) has a cusp there.
"""
import math

from fcs_syk.action import fcs_sweep, min_branch, solve_baseline
from fcs_syk.contour import build_grid
from fcs_syk.saddle import ModelParams

p = ModelParams(J=1.0, zeta=0.5, L=12, T=16)
g = build_grid(p.T, 96, p, resolution=None)
base = solve_baseline(p, g)
phis = [2.7, 2.95, 3.1, math.pi]
res = fcs_sweep(p, phis, [6], g, baseline=base)
best = {r.phi: r for r in min_branch(res)}
for phi in phis:
    vals = {r.branch: r.f_per_N.real for r in res if r.phi == phi}
    line = "  ".join(f"{b}={v:.5f}" for b, v in sorted(vals.items()))
    print(f"phi={phi:.4f}  {line}  -> {best[phi].branch}")

"""Fluctuation kernels and field-theory coefficients.

Runs the internal kernel consistency checks, then prints the XY stiffnesses
in the critical phase and the relaxation rate in the area phase.
"""
from fcs_syk import eft
from fcs_syk.saddle import ModelParams, solve_saddle

ok, detail = eft.kernel_report()
print("kernel checks:", "ok" if ok else "FAILED")
for k, v in detail.items():
    print(f"  {k:10s} {float(v):.3e}")

for zeta in (0.2, 0.5, 0.8):
    p = ModelParams(J=1.0, V=0.5, zeta=zeta)
    s = solve_saddle(p)
    xy = eft.xy_coefficients(s, p)
    print(f"zeta={zeta}: kappa_t={xy.kappa_t:.5f} kappa_x={xy.kappa_x:.5f} "
          f"v={xy.velocity:.4f}")
for zeta in (1.5, 2.5):
    print(f"zeta={zeta}: decay rate {eft.decay_rate(ModelParams(J=1.0, zeta=zeta)):.5f}")

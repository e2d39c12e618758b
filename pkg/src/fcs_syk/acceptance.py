"""Acceptance checks, one function per criterion.

Each returns a :class:`Criterion` with the measured numbers in ``detail``.
Expensive solves are memoised so the suite shares them.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from . import eft
from .action import FROM_ABOVE, FROM_BELOW, fcs_sweep, min_branch, solve_baseline
from .analysis import LOG_CHORD, ONE_MINUS_COS, PHI_SQUARED, fit_scaling
from .contour import TwistSpec, build_grid
from .saddle import ModelParams, s_residual, solve_saddle
from .solver import SolveOptions, extract_bulk_saddle, solve_fixed_point

L_DEFAULT = 20
MU = 0.5
N_T = 192
T_DEFAULT = 60.0
T_LADDER = (40.0, 60.0)
A_SCAN = (4, 6, 8, 10, 12, 14, 16)
HALF_PI = math.pi / 2


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        bits = ", ".join(f"{k}={_short(v)}" for k, v in self.detail.items())
        return f"[{tag}] {self.number:2d} {self.name}: {bits}"


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + " ".join(_short(x) for x in v) + "]"
    return str(v)


def _params(zeta, V, T=T_DEFAULT, J=1.0, L=L_DEFAULT):
    return ModelParams(J=J, V=V, zeta=zeta, mu=MU, L=L, T=T)


def _grid(T=T_DEFAULT, n_t=N_T):
    return build_grid(T, n_t, resolution=None)


@lru_cache(maxsize=None)
def _sweep(zeta, V, phis, A_sizes, T=T_DEFAULT, J=1.0, periodic=False, n_t=N_T):
    p = _params(zeta, V, T, J)
    opts = SolveOptions(periodic=periodic)
    return tuple(fcs_sweep(p, list(phis), list(A_sizes), _grid(T, n_t), opts))


def _f(results, phi, A, branch=FROM_BELOW):
    for r in results:
        if r.A_size == A and abs(r.phi - phi) < 1e-12 and r.branch == branch:
            return r.f_per_N
    raise KeyError((phi, A, branch))


def _a_scan(zeta, V):
    return _sweep(zeta, V, (HALF_PI,), A_SCAN)


PHI_LOG = tuple(k * math.pi / 8 for k in range(1, 5))
PHI_AREA = tuple(k * math.pi / 8 for k in range(1, 9))


def _phi_scan(zeta, V, phis):
    return _sweep(zeta, V, phis, (10,))


def log_fit(zeta, V):
    res = _a_scan(zeta, V)
    return fit_scaling([(A, _f(res, HALF_PI, A).real) for A in A_SCAN], LOG_CHORD, L_DEFAULT)


# 1

def criterion_saddle_closure(n=200, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        J = rng.uniform(0.2, 3.0)
        p = ModelParams(J=J, V=rng.uniform(0, 3 * J), zeta=rng.uniform(0, 3 * J),
                        mu=rng.uniform(-2, 2))
        s = solve_saddle(p)
        # zeta >= J is the S = 0 branch, where the S equation does not apply
        r = s_residual(s.S, s.P, p.J, p.V) if s.S > 0 else s.P - (p.zeta - 0.5 * p.J)
        worst = max(worst, abs(r), s.residual)
    worst_s = 0.0
    for _ in range(n):
        J = rng.uniform(0.2, 3.0)
        zeta = rng.uniform(0, 0.999 * J)
        s = solve_saddle(ModelParams(J=J, V=0.0, zeta=zeta, mu=rng.uniform(-2, 2)))
        worst_s = max(worst_s, abs(s.S - 0.5 * J * math.sqrt(1 - (zeta / J) ** 2)))
    return Criterion(1, "analytic saddle closure", worst < 1e-12 and worst_s < 1e-12,
                     {"max_residual": worst, "max_S_err_V0": worst_s})


# 2

@lru_cache(maxsize=None)
def _bulk(zeta, V, n_t):
    p = _params(zeta, V)
    G, sig, _ = solve_fixed_point(p, TwistSpec(0.0, 0), _grid(T_DEFAULT, n_t), SolveOptions())
    return extract_bulk_saddle(sig, p, _grid(T_DEFAULT, n_t))


def criterion_solver_vs_analytic(tol=1e-3):
    ok = True
    detail = {}
    for zeta in (0.5, 2.5):
        for V in (0.0, 1.0):
            ref = solve_saddle(_params(zeta, V))
            errs = []
            for n_t in (N_T, 2 * N_T):
                b = _bulk(zeta, V, n_t)
                errs.append(max(abs(b["P"] - ref.P), abs(b["S"] - ref.S)))
            good = errs[0] < tol and errs[1] <= errs[0] * (1 + 1e-6) + 1e-12
            ok &= good
            detail[f"z{zeta}V{V:g}"] = errs
    return Criterion(2, "solver vs analytic saddle", ok, detail)


# 3

def criterion_steady_state(As=(2, 10), rel=0.02):
    """T -> 1.5 T changes every f by < rel; the default T is the first rung
    of the ladder that passes."""
    changes = {}
    for T in T_LADDER:
        a = _sweep(0.5, 0.0, (HALF_PI,), As, T)
        b = _sweep(0.5, 0.0, (HALF_PI,), As, 1.5 * T)
        changes[T] = max(abs(_f(b, HALF_PI, A) / _f(a, HALF_PI, A) - 1) for A in As)
    passing = [T for T in T_LADDER if changes[T] < rel]
    smallest = passing[0] if passing else None
    ok = smallest == T_DEFAULT
    return Criterion(3, "steady-state gate", ok,
                     {**{f"dT{T:g}": c for T, c in changes.items()}, "default_T": T_DEFAULT,
                      "smallest_passing": smallest})


# 4

def criterion_log_phase(r2=0.99):
    ok = True
    detail = {}
    for V in (0.0, 1.0):
        lf = log_fit(0.5, V)
        ps = _phi_scan(0.5, V, PHI_LOG)
        pf = fit_scaling([(p, _f(ps, p, 10).real) for p in PHI_LOG], PHI_SQUARED)
        ok &= lf.r_squared > r2 and pf.r_squared > r2
        detail[f"V{V:g}_logchord_r2"] = lf.r_squared
        detail[f"V{V:g}_phi2_r2"] = pf.r_squared
    return Criterion(4, "log phase (zeta=0.5)", ok, detail)


# 5

def criterion_area_phase(r2=0.99, ratio=0.1):
    ok = True
    detail = {}
    for V in (0.0, 1.0):
        s_area = log_fit(2.5, V).slope
        s_log = log_fit(0.5, V).slope
        ps = _phi_scan(2.5, V, PHI_AREA)
        pf = fit_scaling([(p, _f(ps, p, 10).real) for p in PHI_AREA], ONE_MINUS_COS)
        q = abs(s_area) / abs(s_log)
        ok &= q < ratio and pf.r_squared > r2
        detail[f"V{V:g}_slope_ratio"] = q
        detail[f"V{V:g}_1-cos_r2"] = pf.r_squared
    return Criterion(5, "area phase (zeta=2.5)", ok, detail)


# 6

def criterion_symmetries(tol=1e-6):
    """Periodic chain: reflection maps A onto its complement only when the
    sublattice pattern is preserved, which needs even |A| on a ring."""
    phis = (-math.pi / 3, -0.25, 0.0, 0.25, math.pi / 3)
    As = (4, 16, 6, 14)
    res = _sweep(0.5, 0.0, phis, As, periodic=True)
    f0 = max(abs(_f(res, 0.0, A)) for A in As)
    refl = max(abs(_f(res, p, A) - _f(res, p, L_DEFAULT - A)) for p in phis for A in (4, 6))
    conj = max(abs(_f(res, -p, A) - _f(res, p, A).conjugate()) for p in phis for A in As)
    ok = f0 == 0 and refl < tol and conj < tol
    return Criterion(6, "symmetries", ok, {"f0": f0, "A_vs_L-A": refl, "conj": conj})


# 7

def criterion_decoupled(tol=1e-8):
    phis = (-2.5, -1.0, 0.5, 1.5, 3.0)
    res = _sweep(0.5, 0.0, phis, (1, 5, 10, 19), T=20.0, J=0.0)
    worst = max(abs(r.f_per_N) for r in res)
    return Criterion(7, "decoupled limit J=0", worst < tol, {"max_abs_f": worst})


# 8

def criterion_branches(factor=5.0):
    tol = SolveOptions().tol
    phis = (2.95, 3.1, math.pi, -2.95, -3.1, -math.pi)
    res = _sweep(0.5, 0.0, phis, (10,))
    gap = max(abs(_f(res, p, 10, FROM_BELOW).real - _f(res, p, 10, FROM_ABOVE).real)
              for p in phis[:2])
    best = {r.phi: r.f_per_N.real for r in min_branch(res)}
    # phi = pi + d is the same twist as -(pi - d)
    left = (best[math.pi] - best[3.1]) / (math.pi - 3.1)
    right = (best[-3.1] - best[-math.pi]) / (math.pi - 3.1)
    jump = left - right
    ok = gap > factor * tol and jump > 1e-3 * abs(left)
    return Criterion(8, "branch non-analyticity at pi", ok,
                     {"branch_gap": gap, "slope_left": left, "slope_right": right})


# 9

def criterion_kernel_suite(n=100, seed=1):
    return Criterion(9, "kernel suite", *eft.kernel_report(n, seed))


# 10

def criterion_eft_coefficient():
    p = _params(0.5, 0.0)
    pred = eft.log_slope(HALF_PI, eft.default_saddle(p), p)
    got = log_fit(0.5, 0.0).slope
    r = got / pred
    return Criterion(10, "EFT log coefficient", 0.5 <= r <= 2.0,
                     {"fitted": got, "predicted": pred, "ratio": r})


# 11

def criterion_decay_rate(rel=0.1, x=10, window=(1.0, 6.0)):
    """Exponential fit of |G^ud(t,t)| approaching the final time."""
    p = _params(2.5, 0.0)
    g = _grid()
    G, _, _ = solve_fixed_point(p, TwistSpec(0.0, 0), g, SolveOptions())
    tau = g.T - g.times
    sel = (tau >= window[0]) & (tau <= window[1])
    rates = []
    for tr in (G.ud[x - 1], G.du[x - 1]):
        y = np.log(np.abs(tr[sel]))
        rates.append(-np.polyfit(tau[sel], y, 1)[0])
    rate = float(np.mean(rates))
    want = eft.decay_rate(p)
    return Criterion(11, "G^ud decay rate", abs(rate / want - 1) < rel,
                     {"fitted": rate, "predicted": want})


ALL = (criterion_saddle_closure, criterion_solver_vs_analytic, criterion_steady_state,
       criterion_log_phase, criterion_area_phase, criterion_symmetries,
       criterion_decoupled, criterion_branches, criterion_kernel_suite,
       criterion_eft_coefficient, criterion_decay_rate)


def run_all(echo=print):
    out = []
    for fn in ALL:
        c = fn()
        if echo:
            echo(c.line())
        out.append(c)
    return out

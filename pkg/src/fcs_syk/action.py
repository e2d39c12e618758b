"""On-shell G-Sigma action and the full counting statistics F(phi, Q_A)/N."""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np
import scipy.linalg as sl

from .contour import TwistSpec
from .errors import ConvergenceError, SingularMatrixError
from .solver import (SYMMETRIC, SolveOptions, generator, neighbor_sum,
                     solve_fixed_point)

FROM_BELOW = "FromBelow"
FROM_ABOVE = "FromAbove"


def unwind(value, prev):
    """Shift Im(value) by a multiple of 2 pi to land closest to Im(prev)."""
    if prev is None:
        return value
    k = round((prev.imag - value.imag) / (2 * math.pi))
    return complex(value.real, value.imag + 2 * math.pi * k)


def logdet(M, prev=None):
    """log det M from a pivoted LU factorization.

    The imaginary part is the sum of pivot phases (plus pi for an odd
    permutation), moved onto the 2 pi sheet closest to ``prev`` if given.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("logdet needs a square matrix")
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularMatrixError
        warnings.simplefilter("ignore", sl.LinAlgWarning)
        lu, piv = sl.lu_factor(M.astype(complex), check_finite=True)
    d = np.diag(lu)
    if np.any(d == 0):
        raise SingularMatrixError("matrix is singular (zero pivot)")
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    val = complex(np.sum(np.log(np.abs(d))),
                  float(np.sum(np.angle(d))) + math.pi * (swaps % 2))
    val = complex(val.real, math.remainder(val.imag, 2 * math.pi))
    return unwind(val, prev)


def on_shell_action(G, sig, params, grid, twist=None, periodic=False, ordering=SYMMETRIC):
    """-I/N of the saddle, summed over sites.

    Sum of: per-site log partition functions in the Sigma background (the
    Tr log, including the symmetric-ordering constant dt*sum eps), the
    Sigma.G contraction, the interaction term and the hopping term, all
    evaluated with the same equal-time convention as the solver.
    """
    dt = grid.dt
    J, V = params.J, params.V
    c = 1.0 if ordering == SYMMETRIC else -1.0
    eps, _, _ = generator(sig, params)
    m, ud, du = G.m, G.ud, G.du
    trlog = np.sum(G.logZ) + dt * np.sum(eps)
    contraction = dt * np.sum(2 * sig.uu * m + sig.ud * du + sig.du * ud)
    w_v = dt * np.sum(-c * 0.5 * V * (m * m - 0.25) ** 2 + 0.5 * V * (ud * du) ** 2)
    if periodic:
        mn, un, dn = np.roll(m, -1, 0), np.roll(ud, -1, 0), np.roll(du, -1, 0)
        bonds = slice(None)
    else:
        mn, un, dn = m[1:], ud[1:], du[1:]
        bonds = slice(0, -1)
    w_j = dt * np.sum(J * (m[bonds] * mn - 0.25)
                      - 0.5 * J * (un * du[bonds] + dn * ud[bonds]))
    return complex(trlog + contraction + w_v + w_j)


@dataclass
class FcsResult:
    phi: float
    A_size: int
    f_per_N: complex
    branch: str = FROM_BELOW
    meta: dict = field(default_factory=dict)
    action: complex = None

    @property
    def F(self):
        n = self.meta.get("N", 1)
        return n * self.f_per_N


@dataclass
class Baseline:
    """Cached phi = 0 solve shared by every point of a sweep."""
    action: complex
    G: object
    sig: object
    meta: dict


def solve_baseline(params, grid, opts=None, store=None):
    opts = opts or SolveOptions()
    tw = TwistSpec(0.0, 0)
    cached = store.get(0.0, 0, "baseline") if store is not None else None
    if cached is not None:
        opts = _with_init(opts, cached)
    G, sig, meta = solve_fixed_point(params, tw, grid, opts)
    if store is not None:
        store.put(0.0, 0, "baseline", G, sig)
    a = on_shell_action(G, sig, params, grid, tw, opts.periodic, opts.ordering)
    return Baseline(a, G, sig, meta)


def fcs_point(params, twist, grid, opts=None, baseline=None, branch=FROM_BELOW):
    """F(phi, Q_A)/N = [-I(0)/N] - [-I(phi)/N] from two converged solves."""
    opts = opts or SolveOptions()
    twist.check(params.L)
    if baseline is None:
        baseline = solve_baseline(params, grid, opts)
    if twist.phi == 0 or twist.A_size == 0:
        meta = dict(baseline.meta, phi=twist.phi, A_size=twist.A_size, N=params.N)
        return FcsResult(twist.phi, twist.A_size, 0j, branch, meta, baseline.action)
    if opts.init == "analytic":
        opts = _with_init(opts, baseline.sig)
    try:
        G, sig, meta = solve_fixed_point(params, twist, grid, opts)
    except ConvergenceError as e:
        e.phi = twist.phi
        raise
    a = on_shell_action(G, sig, params, grid, twist, opts.periodic, opts.ordering)
    meta = dict(meta, N=params.N, sig=sig, G=G)
    return FcsResult(twist.phi, twist.A_size, complex(baseline.action - a), branch, meta, a)


def _with_init(opts, init):
    d = dict(opts.__dict__)
    d["init"] = init
    return SolveOptions(**d)


def _chain(targets, max_step):
    """Sorted path from 0 through the targets with steps <= max_step."""
    path = [0.0]
    for t in targets:
        cur = path[-1]
        k = max(1, int(math.ceil(abs(t - cur) / max_step - 1e-9)))
        path.extend(cur + (t - cur) * j / k for j in range(1, k))
        path.append(t)
    return path


def continue_branch(params, A_size, targets, grid, opts, baseline, branch, max_step,
                    store=None):
    """Solve along a continuation path; return {target: FcsResult}.

    ``store`` (get/put, e.g. analysis.GreensCache) supplies cached solutions
    as initial guesses and receives every converged point.
    """
    targets = sorted(set(targets), key=abs)
    path = _chain(targets, max_step)
    want = set(targets)
    out = {}
    sig = baseline.sig
    prev_im = 0.0
    for phi in path[1:]:
        tw = TwistSpec(phi, A_size)
        init = store.get(phi, A_size, branch) if store is not None else None
        try:
            r = fcs_point(params, tw, grid, _with_init(opts, sig if init is None else init),
                          baseline, branch)
        except ConvergenceError as e:
            fail = FcsResult(phi, A_size, complex("nan+nanj"), branch,
                             {"converged": False, "error": str(e),
                              "iterations": len(e.trace), "N": params.N})
            if phi in want:
                out[phi] = fail
            break
        sig = r.meta.pop("sig")
        G = r.meta.pop("G")
        if store is not None:
            store.put(phi, A_size, branch, G, sig)
        r = FcsResult(r.phi, r.A_size, unwind(r.f_per_N, complex(0, prev_im)),
                      r.branch, r.meta, r.action)
        prev_im = r.f_per_N.imag
        if phi in want:
            out[phi] = r
    return out


def fcs_sweep(params, phis, A_sizes, grid, opts=None, baseline=None,
              branch_window=0.9 * math.pi, max_step=math.pi / 12, store=None):
    """F(phi, Q_A)/N over a phi x |A| grid by continuation in phi.

    Positive and negative angles are reached by separate continuations from
    phi = 0 (FromBelow).  For |phi| in (branch_window, pi] the other saddle is
    obtained by continuing from 0 the other way round to phi -+ 2 pi, which is
    the same twist (FromAbove).  Failures are recorded, the sweep goes on.
    """
    opts = opts or SolveOptions()
    if baseline is None:
        baseline = solve_baseline(params, grid, opts, store)
    results = []
    for A in A_sizes:
        pos = [p for p in phis if p > 0]
        neg = [p for p in phis if p < 0]
        got = {}
        if pos:
            got.update({(p, FROM_BELOW): r for p, r in continue_branch(
                params, A, pos, grid, opts, baseline, FROM_BELOW, max_step, store).items()})
        if neg:
            got.update({(p, FROM_BELOW): r for p, r in continue_branch(
                params, A, neg, grid, opts, baseline, FROM_BELOW, max_step, store).items()})
        near = [p for p in phis if abs(p) > branch_window and p != 0]
        shifted = {p - math.copysign(2 * math.pi, p): p for p in near}
        for sgn in (1, -1):
            tg = [q for q, p in shifted.items() if math.copysign(1, q) == sgn]
            if not tg:
                continue
            res = continue_branch(params, A, tg, grid, opts, baseline, FROM_ABOVE, max_step,
                                  store)
            for q, r in res.items():
                p = shifted[q]
                got[(p, FROM_ABOVE)] = FcsResult(p, A, r.f_per_N, FROM_ABOVE, r.meta, r.action)
        for p in phis:
            if p == 0:
                meta = dict(baseline.meta, N=params.N)
                results.append(FcsResult(0.0, A, 0j, FROM_BELOW, meta, baseline.action))
                continue
            for br in (FROM_BELOW, FROM_ABOVE):
                if (p, br) in got:
                    results.append(got[(p, br)])
                elif br == FROM_BELOW:
                    results.append(FcsResult(p, A, complex("nan+nanj"), br,
                                             {"converged": False, "error": "not reached",
                                              "N": params.N}))
    return results


def min_branch(results):
    """Reported F per (phi, |A|): the branch with the smallest Re f."""
    best = {}
    for r in results:
        key = (r.phi, r.A_size)
        if not np.isfinite(r.f_per_N.real):
            continue
        if key not in best or r.f_per_N.real < best[key].f_per_N.real:
            best[key] = r
    return [best[k] for k in sorted(best)]

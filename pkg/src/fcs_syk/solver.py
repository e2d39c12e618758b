"""Fixed-point solution of the Schwinger-Dyson equations on the contour.

Self-energies of the Brownian couplings are time local, so the state of the
iteration is a set of equal-time tracks per site:

    m  = G^uu(t,t) = G^dd(t,t), symmetric (0+ and 0-) average,
    ud = G^ud(t,t),  du = G^du(t,t),

and the corresponding Sigma^uu (= Sigma^dd), Sigma^ud, Sigma^du.  Given the
self-energies, Green's functions are evaluated either exactly per slice with
the transfer-matrix engine (default) or by inverting the dense D x D loop
matrix of each site.
"""
from dataclasses import dataclass, field
import math
import time

import numpy as np

from . import transfer
from .contour import TwistSpec, link_weights, loop_matrix
from .errors import ConvergenceError, SingularMatrixError
from .saddle import solve_saddle, solve_saddle_symmetric

SYMMETRIC = "symmetric"
FLIPPED = "flipped"


def site_signs(L):
    return 1.0 - 2.0 * (np.arange(L) % 2)


@dataclass
class SelfEnergy:
    uu: np.ndarray
    ud: np.ndarray
    du: np.ndarray

    @property
    def dd(self):
        return self.uu

    def flat(self):
        return np.concatenate([self.uu.ravel(), self.ud.ravel(), self.du.ravel()])

    @classmethod
    def from_flat(cls, v, shape):
        n = shape[0] * shape[1]
        return cls(v[:n].reshape(shape), v[n:2 * n].reshape(shape), v[2 * n:].reshape(shape))

    def site(self, x):
        i = x - 1
        return SelfEnergy(self.uu[i:i + 1], self.ud[i:i + 1], self.du[i:i + 1])


@dataclass
class ContourGreens:
    """Equal-time Green's function tracks of all sites, shape (L, n_t).

    ``logZ`` holds log of the per-site single-mode partition function in the
    given self-energy background.  :meth:`equal_time` returns the 2 x 2 matrix
    at 0+ or 0-, :func:`two_time` the dense D x D contour matrix.
    """
    m: np.ndarray
    ud: np.ndarray
    du: np.ndarray
    logZ: np.ndarray = None

    def equal_time(self, x, i, side=0):
        mm = self.m[x - 1, i]
        return np.array([[mm + 0.5 * side, self.ud[x - 1, i]],
                         [self.du[x - 1, i], mm - 0.5 * side]])

    def flat(self):
        return np.concatenate([self.m.ravel(), self.ud.ravel(), self.du.ravel()])


@dataclass
class SolveOptions:
    """Iteration controls.

    mixing='damped' is the plain update Sigma <- alpha Sigma_new +
    (1 - alpha) Sigma_old.  mixing='anderson' (default) uses alpha as the
    damping of an Anderson-accelerated update over the last ``history``
    iterates, same fixed point, far fewer iterations.
    init: 'analytic', 'zero', or a SelfEnergy (continuation).
    """
    alpha: float = 0.5
    tol: float = 1e-8
    max_iters: int = 2000
    init: object = "analytic"
    mixing: str = "anderson"
    history: int = 8
    periodic: bool = False
    ordering: str = SYMMETRIC
    engine: str = "transfer"

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.mixing not in ("anderson", "damped"):
            raise ValueError(f"unknown mixing {self.mixing!r}")
        if self.ordering not in (SYMMETRIC, FLIPPED):
            raise ValueError(f"unknown ordering {self.ordering!r}")
        if self.engine not in ("transfer", "dense"):
            raise ValueError(f"unknown engine {self.engine!r}")


def neighbor_sum(a, periodic=False):
    """a[x-1] + a[x+1] along axis 0, open chain drops missing neighbors."""
    if periodic:
        return np.roll(a, 1, axis=0) + np.roll(a, -1, axis=0)
    out = np.zeros_like(a)
    out[1:] += a[:-1]
    out[:-1] += a[1:]
    return out


def self_energy(G, params, x=None, periodic=False, ordering=SYMMETRIC):
    """Sigma from equal-time G for all sites (or only site x).

    Sigma^uu = -(J/2) sum_nbr m + c V (m^3 - m/4), c = +1 for the symmetric
    operator ordering (c = -1 'flipped' reproduces P = zeta/2 in the bulk but
    breaks trace preservation).
    Sigma^ud = (J/2) sum_nbr G^ud - V (G^ud)^2 G^du, likewise for du.
    """
    J, V = params.J, params.V
    c = 1.0 if ordering == SYMMETRIC else -1.0
    m, ud, du = G.m, G.ud, G.du
    uu = -0.5 * J * neighbor_sum(m, periodic) + c * V * (m ** 3 - 0.25 * m)
    s_ud = 0.5 * J * neighbor_sum(ud, periodic) - V * ud * ud * du
    s_du = 0.5 * J * neighbor_sum(du, periodic) - V * du * du * ud
    sig = SelfEnergy(uu, s_ud, s_du)
    return sig if x is None else sig.site(x)


def generator(sig, params):
    """Slice generator entries (eps, g_plus, g_minus) of all sites."""
    s = site_signs(sig.uu.shape[0])[:, None]
    eps = s * params.zeta - sig.uu
    return eps, sig.ud, -sig.du


def transfer_greens(sig, params, twist, grid):
    """Equal-time G of all sites in a fixed Sigma background (exact per slice)."""
    eps, gp, gm = generator(sig, params)
    r0, lT = transfer.boundary_vectors(params.L, params.mu, twist.phi, twist.A_size)
    n, B, Bb, logZ = transfer.evaluate(eps, gp, gm, grid.dt, r0, lT)
    return ContourGreens(0.5 - n, B, -Bb, logZ)


def site_matrix(sig_x, params, twist, grid, x):
    """dt-scaled loop matrix of site x including its self-energy."""
    s = site_signs(params.L)[x - 1]
    eps = s * params.zeta - sig_x.uu[0]
    w = link_weights(grid, eps, eps, twist, params.mu, x)
    M = loop_matrix(w, grid.dt) * grid.dt
    n = grid.n_t
    iu = np.arange(n)
    idn = 2 * n - 1 - iu
    M[iu, idn] += grid.dt * sig_x.ud[0]
    M[idn, iu] += grid.dt * sig_x.du[0]
    return M


def branch_signs(n_t):
    return np.concatenate([np.ones(n_t), -np.ones(n_t)])


def dyson_invert(D0, sig_x, grid, check=True):
    """Dense contour G of one site.

    ``D0`` is the dt-scaled loop matrix already carrying the diagonal
    self-energy in its link weights (see :func:`site_matrix`); ``sig_x`` adds
    the time-local off-diagonal blocks if D0 does not contain them yet (pass
    None otherwise).  Returned G has G[u_i, d_j] = G^ud(t_i, t_j) etc.; the
    d-branch orientation sign is removed.
    """
    M = np.array(D0, dtype=complex)
    if sig_x is not None:
        n = grid.n_t
        iu = np.arange(n)
        idn = 2 * n - 1 - iu
        M[iu, idn] += grid.dt * sig_x.ud[0]
        M[idn, iu] += grid.dt * sig_x.du[0]
    try:
        import scipy.linalg as sl
        lu = sl.lu_factor(M, check_finite=True)
        if np.any(np.diag(lu[0]) == 0):
            raise SingularMatrixError("zero pivot in contour matrix")
        Ginv = sl.lu_solve(lu, np.eye(M.shape[0]))
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SingularMatrixError(str(e)) from e
    if check:
        resid = np.abs(M @ Ginv - np.eye(M.shape[0])).max()
        if resid > 1e-10:
            raise SingularMatrixError(f"Dyson residual {resid:.2e} above 1e-10")
    b = branch_signs(grid.n_t)
    return Ginv * b[:, None] * b[None, :]


def dense_equal_time(Gd, grid):
    """Symmetric equal-time tracks (m, ud, du) from a dense site G."""
    n = grid.n_t
    iu = np.arange(n)
    idn = 2 * n - 1 - iu
    after = Gd[iu, iu]
    # G(t_i, t_i + dt) on the u branch; the last slice has no u successor
    # (the loop turns onto d there) and borrows the previous pair
    nxt = np.minimum(iu + 1, n - 1)
    prv = np.where(iu == n - 1, n - 2, iu)
    before = Gd[prv, nxt]
    m = 0.5 * (after + before)
    return m, Gd[iu, idn], Gd[idn, iu]


def dense_greens(sig, params, twist, grid):
    L = params.L
    m = np.empty(sig.uu.shape, complex)
    ud = np.empty_like(m)
    du = np.empty_like(m)
    logZ = np.empty(L, complex)
    for x in range(1, L + 1):
        M = site_matrix(sig.site(x), params, twist, grid, x)
        Gd = dyson_invert(M, None, grid, check=False)
        m[x - 1], ud[x - 1], du[x - 1] = dense_equal_time(Gd, grid)
        sgn, ld = np.linalg.slogdet(M)
        logZ[x - 1] = ld + np.log(sgn)
    return ContourGreens(m, ud, du, logZ)


def evaluate_greens(sig, params, twist, grid, engine="transfer"):
    if engine == "dense":
        return dense_greens(sig, params, twist, grid)
    return transfer_greens(sig, params, twist, grid)


def two_time(sig, params, twist, grid, x):
    """Dense two-time G of site x in the converged background."""
    return dyson_invert(site_matrix(sig.site(x), params, twist, grid, x), None, grid)


def analytic_greens(params, grid, saddle=None):
    """Translation-invariant equal-time tracks from the bulk saddle."""
    if saddle is None:
        saddle = solve_saddle(params)
    P, S, z = saddle.P, saddle.S, saddle.z
    E = math.hypot(P, S)
    L, n = params.L, grid.n_t
    s = site_signs(L)[:, None] * np.ones((1, n))
    if E == 0:
        m = 0.5 * s
    else:
        m = s * P / (2 * E)
    ud = np.full((L, n), 0.0 if E == 0 else S / (2 * z * E), complex)
    du = np.full((L, n), 0.0 if E == 0 else -z * S / (2 * E), complex)
    return ContourGreens(m.astype(complex), ud, du)


def initial_sigma(params, grid, opts):
    init = opts.init
    if isinstance(init, SelfEnergy):
        return SelfEnergy(init.uu.copy(), init.ud.copy(), init.du.copy())
    if isinstance(init, ContourGreens):
        return self_energy(init, params, periodic=opts.periodic, ordering=opts.ordering)
    shape = (params.L, grid.n_t)
    if init == "zero":
        z = np.zeros(shape, complex)
        return SelfEnergy(z, z.copy(), z.copy())
    if init == "analytic":
        return self_energy(analytic_greens(params, grid), params,
                           periodic=opts.periodic, ordering=opts.ordering)
    raise ValueError(f"unknown init {init!r}")


def solve_fixed_point(params, twist, grid, opts=None):
    """Iterate Sigma -> G -> Sigma to self-consistency.

    Converged when the largest change of any equal-time G entry between
    successive iterations and the fixed-point residual |Sigma[G] - Sigma| are
    both below ``opts.tol``.  Returns (G, Sigma, meta).
    """
    opts = opts or SolveOptions()
    twist = twist if twist is not None else TwistSpec()
    twist.check(params.L)
    t0 = time.perf_counter()
    shape = (params.L, grid.n_t)
    sig = initial_sigma(params, grid, opts)
    x = sig.flat()

    def F(v):
        s = SelfEnergy.from_flat(v, shape)
        G = evaluate_greens(s, params, twist, grid, opts.engine)
        out = self_energy(G, params, periodic=opts.periodic, ordering=opts.ordering)
        return G, out.flat()

    X, R = [], []
    trace = []
    G_prev = None
    converged = False
    G = None
    for it in range(1, opts.max_iters + 1):
        G, fx = F(x)
        if not np.all(np.isfinite(fx)):
            raise ConvergenceError(f"non-finite self-energy at iteration {it}",
                                   trace, twist.phi)
        r = fx - x
        res = float(np.abs(r).max())
        dG = np.inf if G_prev is None else float(np.abs(G.flat() - G_prev).max())
        trace.append(max(res, dG) if np.isfinite(dG) else res)
        if res < opts.tol and dG < opts.tol:
            converged = True
            break
        G_prev = G.flat()
        if opts.mixing == "damped":
            x = x + opts.alpha * r
            continue
        X.append(x.copy())
        R.append(r.copy())
        if len(X) > opts.history + 1:
            X.pop(0)
            R.pop(0)
        if len(X) > 1:
            dR = np.array([R[i + 1] - R[i] for i in range(len(R) - 1)]).T
            dX = np.array([X[i + 1] - X[i] for i in range(len(X) - 1)]).T
            c = np.linalg.lstsq(dR, r, rcond=None)[0]
            x = x + opts.alpha * r - (dX + opts.alpha * dR) @ c
        else:
            x = x + opts.alpha * r
    sig = SelfEnergy.from_flat(x, shape)
    meta = {"iterations": it, "delta": trace[-1], "trace": trace,
            "wall_time": time.perf_counter() - t0, "converged": converged,
            "phi": twist.phi, "A_size": twist.A_size}
    if not converged:
        raise ConvergenceError(
            f"no convergence after {it} iterations (last delta {trace[-1]:.3e}, "
            f"phi={twist.phi})", trace, twist.phi, state=(G, sig, meta))
    return G, sig, meta


def extract_bulk_saddle(sig, params, grid, x0=None, window=None):
    """Bulk (P, S) read off a converged phi = 0 solution.

    The two time boundaries fix the relative phase of the branches to
    different values, so the finite-T solution carries a uniform gradient
    kappa of that phase: Sigma^ud ~ exp(kappa t), Sigma^du ~ exp(-kappa t).
    Undoing the gradient shifts the diagonal energy by kappa/2; the shift has
    the same sign on both sublattices, so P is the sublattice average of
    s_x (eps_x + kappa/2) and S the geometric mean of sqrt(g_plus g_minus).
    Evaluated on the two central sites at mid contour; raw values are
    returned as well.
    """
    L, n, dt = params.L, grid.n_t, grid.dt
    x0 = x0 or L // 2
    w = window or max(2, n // 16)
    k = n // 2
    eps, gp, gm = generator(sig, params)
    sites = [x0 - 1, x0]
    s = site_signs(L)
    kap = []
    for i in sites:
        a = np.log(gp[i, k + w] / gp[i, k - w]).real if abs(gp[i, k]) > 1e-12 else 0.0
        b = np.log(gm[i, k + w] / gm[i, k - w]).real if abs(gm[i, k]) > 1e-12 else 0.0
        kap.append(0.25 * (a - b) / (w * dt))
    kappa = float(np.mean(kap))
    P_sites = [float((s[i] * (eps[i, k] + 0.5 * kappa)).real) for i in sites]
    S_sites = [float(np.sqrt(gp[i, k] * gm[i, k]).real) for i in sites]
    P_raw = [float((s[i] * eps[i, k]).real) for i in sites]
    return {"P": 0.5 * sum(P_sites), "S": math.sqrt(abs(S_sites[0] * S_sites[1])),
            "kappa": kappa, "P_sites": P_sites, "S_sites": S_sites, "P_raw": P_raw,
            "z": float(np.sqrt(abs(gm[sites[0], k] / gp[sites[0], k]))) if abs(gp[sites[0], k]) > 1e-12 else None}


def reference_saddle(params, ordering=SYMMETRIC):
    """Bulk saddle the solver converges to for a given ordering."""
    return solve_saddle_symmetric(params) if ordering == SYMMETRIC else solve_saddle(params)
